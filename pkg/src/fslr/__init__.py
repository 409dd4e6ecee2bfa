"""Feature-selective likelihood-ratio estimation for low- and zero-frequency N-grams."""
from .corpus import (LabeledWindow, TaggedDocument, WindowBatch, extract_windows,
                     parse_tagged, tokenize)
from .counts import (Contingency, PositionalCounts, build_counts, contingency,
                     count_documents, footprint_report, load, merge, save)
from .errors import (ConfigError, CorpusParseError, FormatError, InvariantError,
                     UndefinedRatio)
from .estimator import (ProductEstimator, RatioEstimate, mle_ratio, product_estimate,
                        smoothed_token_ratio, ulsif_ratio)
from .featsel import (FeatureMask, ScorePolicy, score_cet, score_chi2, score_gss,
                      score_tf, select_mask)
from .synth import SyntheticConfig, Trigger, generate_synthetic_corpus

__version__ = "0.1.0"
