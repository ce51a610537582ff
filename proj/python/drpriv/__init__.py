"""Privacy-preserving dimension reduction (AutoGAN-DRP).

Thin python facade over the C++ core: configuration helpers, the command
runner (train / evaluate / attack / sweep-dims / sweep-eps / report) and
checkpoint inspection.
"""

try:
    from ._drpriv import (
        canonicalize_config,
        checkpoint_info,
        default_config,
        run,
    )
except ImportError:  # extension built out-of-tree (plain CMake build)
    from _drpriv import (
        canonicalize_config,
        checkpoint_info,
        default_config,
        run,
    )

__all__ = [
    "canonicalize_config",
    "checkpoint_info",
    "default_config",
    "run",
]
