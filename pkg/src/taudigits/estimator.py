"""scikit-learn style front end to the search engine."""

from __future__ import annotations

from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_is_fitted

from .core import ConfigError, Program, check_points, load_distribution
from .oracles import ProgramClass, VerifierConfig
from .postcondition import Postcondition, parse_postcondition
from .search import Search, SearchConfig


class TauDigits(ClassifierMixin, BaseEstimator):
    """Search for a program of ``program_class`` satisfying ``postcondition`` close to ``spec``.

    There is no training data: ``fit`` draws its own samples from
    ``distribution``.  ``X`` and ``y`` are accepted only for API symmetry.
    After fitting, ``best_`` holds the program (or ``None``), ``best_error_``
    its estimated error, ``report_`` the full run report and ``search_`` the
    engine state.

    >>> from taudigits.core import IntervalProgram, uniform
    >>> from taudigits.oracles import IntervalClass
    >>> est = TauDigits(IntervalClass(), IntervalProgram(0.3), "Pr[ret == 1] >= 0.5",
    ...                 uniform([0], [1]), depth_budget=20).fit()
    >>> est.best_error_ < 0.5
    True
    """

    def __init__(self, program_class: ProgramClass | None = None, spec: Program | None = None,
                 postcondition: str | Postcondition | None = None, distribution=None, tau: float = 1.0,
                 adaptive: bool = False, time_budget_s: float | None = None, depth_budget: int | None = None,
                 verify_samples: int = 10_000, confidence: float = 0.95, seed: int = 0,
                 threshold_denominator: str = "depth", record_trie: bool = False,
                 target_error: float | None = None):
        self.program_class = program_class
        self.spec = spec
        self.postcondition = postcondition
        self.distribution = distribution
        self.tau = tau
        self.adaptive = adaptive
        self.time_budget_s = time_budget_s
        self.depth_budget = depth_budget
        self.verify_samples = verify_samples
        self.confidence = confidence
        self.seed = seed
        self.threshold_denominator = threshold_denominator
        self.record_trie = record_trie
        self.target_error = target_error

    def _validate(self):
        if self.program_class is None or self.spec is None:
            raise ConfigError("program_class and spec are required")
        if self.postcondition is None or self.distribution is None:
            raise ConfigError("postcondition and distribution are required")
        post = self.postcondition
        if isinstance(post, str):
            post = parse_postcondition(post)
        dist = self.distribution
        if isinstance(dist, (str, dict)):
            dist = load_distribution(dist)
        cfg = SearchConfig(tau=self.tau, adaptive=self.adaptive,
                           threshold_denominator=self.threshold_denominator,
                           depth_budget=self.depth_budget, time_budget_s=self.time_budget_s,
                           seed=self.seed, record_trie=self.record_trie, target_error=self.target_error)
        vcfg = VerifierConfig(confidence=self.confidence, n=self.verify_samples, seed=self.seed)
        return post, dist, cfg, vcfg

    def fit(self, X=None, y=None):
        post, dist, cfg, vcfg = self._validate()
        self.search_ = Search(self.program_class, self.spec, dist, post, cfg, verifier_cfg=vcfg).run()
        best = self.search_.best
        self.best_ = best.program if best else None
        self.best_error_ = best.error.value if best else None
        self.depth_ = self.search_.depth
        self.report_ = self.search_.report()
        self.n_features_in_ = self.program_class.dim
        return self

    def predict(self, X):
        check_is_fitted(self, "search_")
        X = check_points(X, self.n_features_in_)
        if self.best_ is None:
            raise ConfigError("no program satisfying the postcondition was found")
        return self.best_.predict(X)
