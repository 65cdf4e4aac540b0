"""Default prompt templates, one per agent tag.

Every template is Handlebars (rendered by prompts.render_template) and uses
triple-stash placeholders so story text is inserted verbatim. A run may
replace any of them through RunConfig.prompts (tag → template file).

Bindings per tag:
  init    brief
  goal    k, summary, long_term_goal, character_names
  role    character_name, character_id, chapter, goal, view, contributions[.author .text]
  scorer  goal, plot, events, rules[.name .description], summary
  exit    chapter, long_term_goal, summary
  recall  chapter, summary, candidates[.id .chapter .description]
  thread  chapter, summary, planned[.target_chapter .description]
  plan    chapter, summary, events[.id .description], recall, thread, genre, style_notes, target_words
  writer  chapter, title, beats, genre, style_notes, target_words, summary
  caa     chapter, previous_features, chapter_text
  gea     chapter, features, interval_info
"""

from pathlib import Path

from .prompts import PromptTemplate

DEFAULT_INIT_PROMPT = """\
You are setting up a long-form story from a user's brief.

## Brief
{{{brief}}}

Extract the story setup. Keep every name and quoted phrase from the brief \
exactly as written. Put any rules of the world (magic, technology, taboos) \
in "constraints". Leave a field empty rather than inventing it when the \
brief says nothing about it.

Relationship kinds: kinship, romantic, rivalry, alliance, or "other:<label>". \
Strength is between 0 and 1. Direction is "directed" or "mutual".

Reply with one JSON object only:
{"title": "...", "background": "...", "environment": "...", "constraints": "...", "long_term_goal": "...",
 "characters": [{"name": "...", "static_attrs": {"trait": "..."}}],
 "relationships": [{"src_name": "...", "dst_name": "...", "kind": "...", "strength": 0.5, "direction": "mutual"}]}\
"""

DEFAULT_GOAL_PROMPT = """\
You are planning the next chapter of a story.

## Story so far
{{{summary}}}

## Long-term goal
{{{long_term_goal}}}

## Characters
{{{character_names}}}

Propose exactly {{k}} distinct short-term goals for the next chapter. Each \
goal is a different path toward the long-term goal. Only mention characters \
from the list above.

Reply with one JSON object only:
{"goals": [{"description": "...", "rationale": "...", "characters": ["name", ...]}]}\
"""

DEFAULT_ROLE_PROMPT = """\
You are {{{character_name}}} [{{{character_id}}}], one voice in a group \
drafting chapter {{chapter}} of a story. You only know what is below.

## What you know
{{{view}}}

## Goal for this chapter
{{{goal}}}

{{#if contributions}}
## The plot so far this chapter
{{#each contributions}}
- {{{author}}}: {{{text}}}
{{/each}}

{{/if}}
Continue the plot from your own point of view: add what you do, say or \
cause next. Every event you draft must include you ({{{character_id}}}) as \
a participant. Refer to other characters by their [id].

Reply with one JSON object only:
{"text": "your contribution in a few sentences",
 "events": [{"description": "...", "consequences": ["..."],
   "scene": {"location": "...", "time_label": "...", "environment": "..."},
   "participants": [{"character": "{{{character_id}}}", "emotional_impact": "...", "impact_intensity": 0.0}],
   "relationship_changes": [{"src": "id", "dst": "id", "kind": "alliance", "strength": 0.5, "direction": "mutual"}]}]}\
"""

DEFAULT_SCORER_PROMPT = """\
You judge candidate plots for the next chapter of a story.

## Story so far
{{{summary}}}

## Candidate goal
{{{goal}}}

## Candidate plot
{{{plot}}}

## Drafted events
{{{events}}}

## Rules
{{#each rules}}
- {{{name}}}: {{{description}}}
{{/each}}

Score the candidate against every rule from 0 to 10 (at most two decimals). \
Be strict; an ordinary plot scores around 6.

Reply with one JSON object only:
{"scores": {"<rule name>": 0.0}}\
"""

DEFAULT_EXIT_PROMPT = """\
Decide whether a story has reached its long-term goal after chapter {{chapter}}.

## Long-term goal
{{{long_term_goal}}}

## Current state
{{{summary}}}

Answer true only if the goal is clearly achieved.

Reply with one JSON object only:
{"achieved": false, "reason": "..."}\
"""

DEFAULT_RECALL_PROMPT = """\
You help write chapter {{chapter}} by recalling what matters from earlier chapters.

## This chapter
{{{summary}}}

## Earlier events
{{#each candidates}}
- [{{{id}}}] chapter {{chapter}}: {{{description}}}
{{/each}}

Select the earlier events this chapter should build on and note each \
character's emotional memory that matters now. Only cite ids from the list.

Reply with one JSON object only:
{"relevant_events": [{"event_id": "...", "why_relevant": "..."}],
 "emotional_memory": {"<character id>": "..."}}\
"""

DEFAULT_THREAD_PROMPT = """\
You help write chapter {{chapter}} by seeding foreshadowing for planned plots.

## This chapter
{{{summary}}}

## Planned plots
{{#each planned}}
- chapter {{target_chapter}}: {{{description}}}
{{/each}}

Give at most one subtle hint per planned plot. Only use the target chapters listed.

Reply with one JSON object only:
{"foreshadowing": [{"target_chapter": 0, "hint": "..."}]}\
"""

DEFAULT_PLAN_PROMPT = """\
You are planning the prose of chapter {{chapter}} as a {{{genre}}}.

## Chapter state
{{{summary}}}

## Events to cover
{{#each events}}
- [{{{id}}}] {{{description}}}
{{/each}}

{{#if recall}}
## Recall
{{{recall}}}

{{/if}}
{{#if thread}}
## Foreshadowing
{{{thread}}}

{{/if}}
## Style
{{{style_notes}}} (about {{target_words}} words)

Write an ordered beat list. Every event above must be covered by at least \
one beat; list the ids each beat covers.

Reply with one JSON object only:
{"title": "chapter title", "beats": [{"text": "...", "event_ids": ["e1"]}]}\
"""

DEFAULT_WRITER_PROMPT = """\
Write chapter {{chapter}} "{{{title}}}" as a {{{genre}}}.

## Chapter state
{{{summary}}}

## Beats
{{#each beats}}
- {{{this}}}
{{/each}}

## Style
{{{style_notes}}}

Write about {{target_words}} words of finished text following the beats in \
order. Output only the chapter text, without a heading.\
"""

DEFAULT_CAA_PROMPT = """\
You analyse one chapter of a long story and score it.

## Surface features of earlier chapters
{{{previous_features}}}

## Chapter {{chapter}}
{{{chapter_text}}}

First record this chapter's surface features: a plain summary of who did \
what, where, and how it ended, and the objective conditions at its end \
(possessions, relationships, locations, task progress).

Then score this chapter alone on Relevance, Coherence, Empathy, Surprise, \
Creativity, Complexity and Immersion, 0 to 10 with at most two decimals. \
Start each score at 6 and move it only for concrete reasons in the text.

Reply with one JSON object only:
{"Surface Features": {"Plot Summary": "...", "Current Objective Conditions": "..."},
 "Partial Scores": {"Relevance": 6.0, "Coherence": 6.0, "Empathy": 6.0, "Surprise": 6.0,
   "Creativity": 6.0, "Complexity": 6.0, "Immersion": 6.0}}\
"""

DEFAULT_GEA_PROMPT = """\
You evaluate a long story as a whole, up to chapter {{chapter}}, from chapter \
surface features only.

{{#if interval_info}}
## Story summary so far
{{{interval_info}}}

{{/if}}
## Surface features of all chapters
{{{features}}}

Score the whole story on Relevance, Coherence, Empathy, Surprise, \
Creativity, Complexity and Immersion, 0 to 10 with at most two decimals. \
Start each score at 6; a few strong chapters do not lift the whole.

Then update the story summary: an overall synopsis (one sentence, at most \
40 words), the status of at most three main characters (at most 100 words) \
and the current plot status (one sentence, at most 50 words).

Reply with one JSON object only:
{"Global Scores": {"Relevance": 6.0, "Coherence": 6.0, "Empathy": 6.0, "Surprise": 6.0,
   "Creativity": 6.0, "Complexity": 6.0, "Immersion": 6.0},
 "Story Summary": {"Overall Synopsis": "...", "Main Characters Status Update": "...",
   "Current Plot Status": "..."}}\
"""

DEFAULT_TEMPLATES: dict[str, PromptTemplate] = {
    tag: PromptTemplate(name=tag, body=body)
    for tag, body in {
        "init": DEFAULT_INIT_PROMPT,
        "goal": DEFAULT_GOAL_PROMPT,
        "role": DEFAULT_ROLE_PROMPT,
        "scorer": DEFAULT_SCORER_PROMPT,
        "exit": DEFAULT_EXIT_PROMPT,
        "recall": DEFAULT_RECALL_PROMPT,
        "thread": DEFAULT_THREAD_PROMPT,
        "plan": DEFAULT_PLAN_PROMPT,
        "writer": DEFAULT_WRITER_PROMPT,
        "caa": DEFAULT_CAA_PROMPT,
        "gea": DEFAULT_GEA_PROMPT,
    }.items()
}


def load_templates(overrides: dict[str, str] | None = None, base_dir: Path | None = None) -> dict[str, PromptTemplate]:
    """Defaults with per-tag overrides read from template files."""
    templates = dict(DEFAULT_TEMPLATES)
    for tag, file_name in (overrides or {}).items():
        if tag not in DEFAULT_TEMPLATES:
            raise ValueError(f"No agent tag '{tag}' to override")
        path = Path(file_name)
        if base_dir is not None and not path.is_absolute():
            path = base_dir / path
        templates[tag] = PromptTemplate(name=tag, body=path.read_text(encoding="utf-8"))
    return templates
