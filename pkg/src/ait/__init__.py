"""Exact, budget-bounded experiments in algorithmic information theory.

Modules: :mod:`ait.codec` (prefix codes), :mod:`ait.machine` (a toy
self-delimiting machine and bounded complexities), :mod:`ait.semimeasure`
(bounded algorithmic probability), :mod:`ait.randomness` (randomness tests),
:mod:`ait.measures` (finite measures and their distances) and
:mod:`ait.harness` (experiment runner behind the ``ait`` command).
"""

__version__ = "0.1.0"
