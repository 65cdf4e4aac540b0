"""Prototype well-formedness report.

validate() returns one message per invariant violation; an empty list means the
prototype is well-formed. Checked: unique ids and names, dangling edges,
strength/kind domains, relationship version monotonicity, chapter ordering of
the append-only stores, and the snapshot set (0..head, each snapshot holding
exactly the elements labelled ≤ its chapter).
"""

from bisect import bisect_right
from collections.abc import Sequence

from .core import StoryPrototype, is_valid_kind


def _check_unique(kind: str, ids: Sequence[str], report: list[str]) -> None:
    seen: set[str] = set()
    for item_id in ids:
        if item_id in seen:
            report.append(f"duplicate {kind} id {item_id}")
        seen.add(item_id)


def _check_ordered(kind: str, chapters: Sequence[int], report: list[str]) -> None:
    for i in range(1, len(chapters)):
        if chapters[i] < chapters[i - 1]:
            report.append(f"{kind} store out of chapter order at position {i}")
            return


def validate(proto: StoryPrototype) -> list[str]:
    report: list[str] = []
    chars = {c.id: c for c in proto.characters}
    scenes = {s.id: s for s in proto.scenes}
    limit = proto.open_chapter

    _check_unique("character", [c.id for c in proto.characters], report)
    _check_unique("scene", [s.id for s in proto.scenes], report)
    _check_unique("event", [e.id for e in proto.events], report)
    names: set[str] = set()
    for char in proto.characters:
        if char.name.lower() in names:
            report.append(f"duplicate character name {char.name}")
        names.add(char.name.lower())
        if char.created_chapter > limit:
            report.append(f"character {char.id} created after the open chapter")

    latest: dict[tuple[str, str, str], int] = {}
    for version in proto.relationships:
        label = f"relationship {version.src}->{version.dst} ({version.kind}) @ {version.chapter}"
        for endpoint in (version.src, version.dst):
            if endpoint not in chars:
                report.append(f"{label}: dangling endpoint {endpoint}")
            elif chars[endpoint].created_chapter > version.chapter:
                report.append(f"{label}: endpoint {endpoint} does not exist yet")
        if version.src == version.dst:
            report.append(f"{label}: self reference")
        if not is_valid_kind(version.kind):
            report.append(f"{label}: unknown kind")
        if not 0.0 <= version.strength <= 1.0:
            report.append(f"{label}: strength out of range")
        if version.chapter > limit:
            report.append(f"{label}: after the open chapter")
        previous = latest.get(version.key)
        if previous is not None and version.chapter <= previous:
            report.append(f"{label}: non-monotone version (previous {previous})")
        latest[version.key] = version.chapter

    for event in proto.events:
        scene = scenes.get(event.scene)
        if scene is None:
            report.append(f"event {event.id}: dangling scene {event.scene}")
        elif scene.created_chapter > event.chapter:
            report.append(f"event {event.id}: scene {scene.id} does not exist yet")
        if not event.participants:
            report.append(f"event {event.id}: no participants")
        for part in event.participants:
            if part.character not in chars:
                report.append(f"event {event.id}: dangling participant {part.character}")
            elif chars[part.character].created_chapter > event.chapter:
                report.append(f"event {event.id}: participant {part.character} does not exist yet")
        if event.chapter > limit:
            report.append(f"event {event.id}: after the open chapter")

    char_chapters = [c.created_chapter for c in proto.characters]
    rel_chapters = [r.chapter for r in proto.relationships]
    event_chapters = [e.chapter for e in proto.events]
    scene_chapters = [s.created_chapter for s in proto.scenes]
    _check_ordered("character", char_chapters, report)
    _check_ordered("relationship", rel_chapters, report)
    _check_ordered("event", event_chapters, report)
    _check_ordered("scene", scene_chapters, report)

    expected = set(range(proto.head_chapter + 1))
    for chapter in sorted(expected - proto.snapshots.keys()):
        report.append(f"missing snapshot {chapter}")
    for chapter in sorted(proto.snapshots.keys() - expected):
        report.append(f"snapshot {chapter} beyond head {proto.head_chapter}")
    for chapter, mark in sorted(proto.snapshots.items()):
        if mark.chapter != chapter:
            report.append(f"snapshot {chapter} labelled {mark.chapter}")
        counts = (
            ("characters", mark.characters, char_chapters),
            ("relationships", mark.relationships, rel_chapters),
            ("events", mark.events, event_chapters),
            ("scenes", mark.scenes, scene_chapters),
        )
        for kind, have, chapters in counts:
            want = bisect_right(chapters, chapter)
            if have != want:
                report.append(f"snapshot {chapter}: {have} {kind}, replay gives {want}")
    return report
