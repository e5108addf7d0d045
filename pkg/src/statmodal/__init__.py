"""Exact model checking of probabilistic and epistemic dataset properties.

Datasets are finite multisets of rows, each row a total assignment of an
input, an actual label, and (optionally) a predicted label.  Formulas talk
about one dataset at a time: probability bounds on row properties,
conditioning, distribution indistinguishability, knowledge over declared
accessibility relations, and expected-loss bounds.  All arithmetic is
exact rational; nothing here ever rounds.

Typical entry points: `load_model` for a YAML model file, `parse_formula`
for the surface syntax, `evaluate` for a verdict, and the `templates`
constructors for the stock property shapes (confusion rates, robustness,
group fairness).
"""

from .errors import (AdapterCrashed, ArityMismatch, EmptyWorld, FormulaError,
                     FormulaSyntaxError, IncompatibleFeature,
                     IncompatibleValues, MalformedInterval, MissingAdapter,
                     MissingPredictions, OutOfRange, OverlappingIntervals,
                     ParseError, ProtocolViolation, SchemaMismatch,
                     StatModalError, UnknownGroup, UnknownKind, UnknownLabel,
                     UnknownLoss, UnknownPredicate, UnknownRelation,
                     UnknownSymbol, UnknownTransform, UnknownVariable,
                     UnknownWorld)
from .values import (Label, NumVec, State, numvec, parse_rational,
                     render_rational, state)
from .worlds import (UNDEFINED, Distribution, World, marginal,
                     restrict_world, world_from_counts, world_from_rows)
from .divergence import (Distance, DivergenceSpec, MetricSpec, divergence,
                         ground_metric, metric_from_name, total_variation,
                         wasserstein_inf, within)
from .syntax import (FALSE, FULL, TRUE, And, Atom, Cond, DatasetFormula,
                     ExpLoss, Indist, Interval, IntervalSet, Know, Not, Prob,
                     StaticAnd, StaticFormula, StaticNot, Trans, and_all,
                     dataset_false, dataset_iff, dataset_implies, dataset_or,
                     dataset_true, format_formula, interval_set, point,
                     possibly, static_and_all, static_iff, static_implies,
                     static_or)
from .model import (VAR_X, VAR_Y, VAR_YHAT, DistributionalModel, GroupDef,
                    PredicateDef, Schema, build_model, validate_world)
from .losses import builtin_losses
from .parser import parse_formula, parse_interval, parse_static
from .evaluate import (TraceNode, Verdict, eval_static, evaluate,
                       evaluate_all, expected_loss, prob_of, restrict)
from .templates import (CONFUSION_KINDS, build_template, confusion,
                        equal_opportunity, equalized_odds,
                        generalization_error, group_fairness, robust_variant,
                        sufficiency, target_robust, total_robust)
from .dataio import (fill_predictions, load_world, render_feature_value,
                     render_input, run_adapter, save_world)
from .transforms import (TransformSpec, apply_transform,
                         build_robustness_relation)
from .config import load_model
from .report import (ConfusionReport, FairnessReport, confusion_quantities,
                     fairness_quantities, render_decimal, render_quantity)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
