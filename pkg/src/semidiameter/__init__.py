"""Derivation-sequence diameters of transformation and partition
semigroups on the naturals.

The package splits into:

* :mod:`semidiameter.terms` / :mod:`semidiameter.combinators` -- the
  symbolic map grammar, the fixed generator maps, and the enumerator kit;
* :mod:`semidiameter.capability` / :mod:`semidiameter.classes` --
  computability records, window checks, class membership, sampling;
* :mod:`semidiameter.rightwitness` / :mod:`semidiameter.leftwitness` --
  constructors emitting bounded derivation sequences;
* :mod:`semidiameter.refute` -- depth-bounded refuters with replayable
  certificates;
* :mod:`semidiameter.partitions` -- diagram arithmetic and the
  diagonal-act construction;
* :mod:`semidiameter.oracle` -- exhaustive ground truth on finite
  semigroups;
* :mod:`semidiameter.cli` -- the batch front end.
"""

from .terms import (AffineMod, Compose, Const, Id, MapExpr, Opaque, PackPair,
                    Patch, PiecewiseMod, UnpackFirst, UnpackSecond,
                    BudgetExhausted, evaluate, pack, unpack, to_json,
                    from_json, opaque)
from .combinators import (ALPHA_HAT, ALPHA_TILDE, BETA_HAT, BETA_TILDE,
                          gamma_hat, gamma_tilde)
from .capability import (Capability, Enumeration, PreimageInfo, WindowReport,
                         check_capabilities, verify_equal_on_window)
from .classes import (PartialMapExpr, build_element, member_check,
                      random_element, k_class_probe)
from .sequences import (DerivationSequence, Step, WitnessResult,
                        verify_sequence)
from .partitions import FinitePartition

__all__ = [name for name in dir() if not name.startswith("_")]

__version__ = "0.1.0"
