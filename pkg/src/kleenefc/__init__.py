"""Kleene-style correspondences between free-choice nets, product systems and
connected expressions over a distributed alphabet."""
from .alphabet import (DistributedAlphabet, ExplorationLimit, FiniteAcceptor, KleeneError,
                       MissingAnnotation, PreconditionViolated, VerificationFailed, Verdict,
                       acceptor_equal, acceptor_language_bounded)
from .nets import LabelledNet, NetSystem, Transition
from .products import ProductSystem, SequentialSystem
from .expressions import ConnectedExpression, SumExpression, fsync, parse_regex, parse_sce

__all__ = ["DistributedAlphabet", "ExplorationLimit", "FiniteAcceptor", "KleeneError", "MissingAnnotation",
           "PreconditionViolated", "VerificationFailed", "Verdict", "acceptor_equal",
           "acceptor_language_bounded", "LabelledNet", "NetSystem", "Transition", "ProductSystem",
           "SequentialSystem", "ConnectedExpression", "SumExpression", "fsync", "parse_regex", "parse_sce"]

__version__ = "0.1.0"
