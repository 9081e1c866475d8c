"""Dense free families of partial automorphisms on small homogeneous structures."""

from __future__ import annotations

import importlib

# Re-exports resolve on first use, so importing the verifier alone never
# pulls in the construction modules.
_EXPORTS = {
    "Direction": "automorphisms",
    "ImagePolicy": "automorphisms",
    "LazyAutomorphism": "automorphisms",
    "PartialAutomorphism": "automorphisms",
    "Witness": "free_extension",
    "kill_word": "free_extension",
    "witness_persists": "free_extension",
    "AmbientStructure": "structures",
    "Cut": "structures",
    "QfType": "structures",
    "SpreadSequence": "structures",
    "StructureKind": "structures",
    "new_structure": "structures",
    "GeneratorLabel": "words",
    "Letter": "words",
    "ReducedWord": "words",
    "Role": "words",
    "enumerate_words": "words",
    "evaluate": "words",
    "reduce": "words",
}


def __getattr__(name: str):
    if name not in _EXPORTS:
        raise AttributeError(f"module {__name__!r} has no attribute {name!r}")
    return getattr(importlib.import_module(f".{_EXPORTS[name]}", __name__), name)


__all__ = [
    "AmbientStructure",
    "Cut",
    "Direction",
    "GeneratorLabel",
    "ImagePolicy",
    "LazyAutomorphism",
    "Letter",
    "PartialAutomorphism",
    "QfType",
    "ReducedWord",
    "Role",
    "SpreadSequence",
    "StructureKind",
    "Witness",
    "enumerate_words",
    "evaluate",
    "kill_word",
    "new_structure",
    "reduce",
    "witness_persists",
]
