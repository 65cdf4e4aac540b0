"""Story Prototype engine — long-form narrative generation and evaluation.

Three agent workflows run over a versioned dual knowledge graph:
  init      — brief → InitialConfig → snapshot 0
  storygen  — goals → role agents → PlotWeave → scorer → commit → exit check
  writing   — recall + thread → writing plan → genre text → chapter files
The hnes package scores chapter files (per-chapter CAA, interval GEA, S_q/S_l/QLS).

Run scripts/arch.sh for a per-module overview.
"""
