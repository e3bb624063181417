"""
fxp command-line front end: one query per process.

Usage:
    fxp axp --model tree.json --instance v112.json --delta 1/2 --strict
    fxp enumerate --model tree.json --instance v010.json --output structured
    fxp shap --model tree.json --instance v112.json --ledger
    fxp robust --model tree.json --instance v112.json --norm 0 --eps 1 --fix x1
    fxp validate --model tree.json

Commands:
    axp         one abductive explanation (deletion, --order to change it)
    cxp         one contrastive explanation
    enumerate   all AXps and CXps
    relevancy   relevant, irrelevant and necessary features
    shap        exact SHAP scores and the efficiency check
    audit       SHAP scores next to feature relevancy
    inflate     one AXp widened to value sets, rendered as a rule
    robust      closest constrained adversarial example
    validate    parse and check a model (and an instance, if given)

Exit codes: 0 ok, 1 usage, 2 parse/validation, 3 infeasible query,
4 resource cap. FXP_BRUTE_CAP overrides the brute-force point cap.
"""

import argparse
import logging
import sys
from dataclasses import dataclass
from fractions import Fraction
from typing import List, Optional, Sequence, TextIO, Tuple

from fxp import (
    CapExceededError,
    DistanceBound,
    InfeasibleQueryError,
    ModelError,
    SimilaritySpec,
    audit,
    enumerate_explanations,
    find_adversarial_example,
    inflate,
    load_instance,
    load_model,
    make_problem,
    one_axp,
    one_cxp,
    relevant_features,
    shap_all,
    write_report,
)
from fxp.attribution import DEFAULT_MAX_SHAP_FEATURES
from fxp.model import ModelValidationError, TreeModel
from fxp.oracle import AdversarialQuery, Norm, parse_eps, parse_norm
from fxp.serialization import canonical_json_dumps, format_rational, format_rational_text, parse_rational

logger = logging.getLogger(__name__)

COMMANDS = ("axp", "cxp", "enumerate", "relevancy", "shap", "audit", "inflate", "robust", "validate")
OUTPUTS = ("text", "structured")

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INVALID = 2
EXIT_INFEASIBLE = 3
EXIT_CAP = 4


class UsageError(Exception):
    """Bad flags or a bad flag combination."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


@dataclass(frozen=True)
class CliConfig:
    command: str
    model_path: str
    instance_path: Optional[str] = None
    delta: Optional[Fraction] = None
    strict: bool = False
    order: Optional[Tuple[str, ...]] = None
    norm: Norm = 0
    eps: Optional[Fraction] = None
    fix: Tuple[str, ...] = ()
    output: str = "text"
    limit: Optional[int] = None
    max_shap_features: int = DEFAULT_MAX_SHAP_FEATURES
    ledger: bool = False
    out: Optional[str] = None
    relevancy_delta: Optional[Fraction] = None
    relevancy_strict: bool = False
    allow_mismatch: bool = False
    verbose: bool = False


# ──────────────────────────────────────────────
# Flag validation
# ──────────────────────────────────────────────

def check_config(config: CliConfig) -> None:
    """Reject flag combinations that make no sense for the command, before loading anything."""
    if config.command not in COMMANDS:
        raise UsageError(f"unknown command {config.command!r}")
    if config.output not in OUTPUTS:
        raise UsageError(f"--output must be one of {', '.join(OUTPUTS)}")
    if config.command != "validate" and not config.instance_path:
        raise UsageError(f"{config.command} needs --instance")
    if config.strict and config.delta is None:
        raise UsageError("--strict needs --delta")
    if config.delta is not None and config.delta < 0:
        raise UsageError("--delta must be nonnegative")
    if config.strict and config.delta == 0:
        raise UsageError("--strict with --delta 0 leaves no output similar to the instance")
    relevancy_delta = config.relevancy_delta if config.relevancy_delta is not None else config.delta
    if config.relevancy_strict and not relevancy_delta:
        raise UsageError("--relevancy-strict with --relevancy-delta 0 leaves no output similar to the instance")
    if config.order is not None and len(set(config.order)) != len(config.order):
        raise UsageError("--order lists a feature twice")
    if config.limit is not None and config.limit <= 0:
        raise UsageError("--limit must be positive")
    if config.max_shap_features <= 0:
        raise UsageError("--max-shap-features must be positive")
    if config.order is not None and config.command not in ("axp", "cxp", "inflate"):
        raise UsageError("--order applies to axp, cxp and inflate")
    if config.fix and config.command != "robust":
        raise UsageError("--fix applies to robust only")
    if config.eps is not None and config.command not in ("axp", "cxp", "enumerate", "relevancy", "robust"):
        raise UsageError("--eps applies to axp, cxp, enumerate, relevancy and robust")
    if config.ledger and config.command not in ("shap", "audit"):
        raise UsageError("--ledger applies to shap and audit")
    relevancy_flags = config.relevancy_delta is not None or config.relevancy_strict or config.allow_mismatch
    if relevancy_flags and config.command != "audit":
        raise UsageError("--relevancy-delta, --relevancy-strict and --allow-mismatch apply to audit only")


def _feature_ids(model: TreeModel, tokens: Sequence[str], flag: str) -> List[int]:
    space = model.space
    ids = []
    for token in tokens:
        try:
            ids.append(space.feature(int(token)).id if token.isdigit() else space.by_name(token).id)
        except ModelValidationError:
            raise UsageError(f"{flag}: unknown feature {token!r}") from None
    if len(set(ids)) != len(ids):
        raise UsageError(f"{flag} names a feature twice")
    return ids


def _similarity(model: TreeModel, delta: Optional[Fraction], strict: bool, flag: str) -> Optional[SimilaritySpec]:
    if model.is_classification:
        if delta is not None:
            raise UsageError(f"{flag} cannot be used with a classification task")
        return None
    if delta is None:
        return None
    return SimilaritySpec.threshold(delta, strict=strict)


def _bound(config: CliConfig) -> Optional[DistanceBound]:
    if config.eps is None:
        return None
    return DistanceBound(norm=config.norm, eps=config.eps)


# ──────────────────────────────────────────────
# Commands
# ──────────────────────────────────────────────

def _render_trace(explanation, space) -> List[str]:
    lines = []
    for step in explanation.trace:
        path = "none" if step.path is None else "<" + ",".join(str(n) for n in step.path) + ">"
        outcome = "dropped" if step.dropped else "kept"
        lines.append(f"  drop {space.feature(step.feature).name} from {space.format_set(step.current)}: "
                     f"path {path}, {outcome} -> {space.format_set(step.result)}")
    return lines


def _shap_lines(report, space) -> List[str]:
    lines = [f"{space.feature(i).name}: {format_rational_text(s)}" for i, s in sorted(report.scores.items())]
    lines.append(f"baseline: {format_rational_text(report.baseline)}")
    lines.append(f"full: {format_rational_text(report.full)}")
    lines.append(f"sum: {format_rational_text(report.total)}")
    lines.append("efficiency: ok")
    for i, rows in sorted(report.ledger.items()):
        for row in rows:
            lines.append(f"  {space.feature(i).name} | S={space.format_set(row.subset)} "
                         f"delta={format_rational(row.delta)} weight={format_rational(row.weight)}")
    return lines


def _execute(config: CliConfig) -> Tuple[dict, List[str]]:
    """Run the query and return (structured record, text lines)."""
    model = load_model(config.model_path)
    space = model.space

    if config.command == "validate":
        record = {"valid": True, "task": model.task, "features": space.m,
                  "nodes": len(model.nodes), "paths": len(model.paths)}
        lines = [f"ok: {model.task} tree, {space.m} features, {len(model.nodes)} nodes, {len(model.paths)} paths"]
        if config.instance_path:
            sample = load_instance(config.instance_path, model)
            record["instance"] = list(sample.point)
            lines.append(f"instance {space.format_point(sample.point)} -> {model.format_output(sample.output)}")
        return record, lines

    similarity = _similarity(model, config.delta, config.strict, "--delta")
    order = _feature_ids(model, config.order, "--order") if config.order is not None else None
    fixed = _feature_ids(model, config.fix, "--fix")
    relevancy_similarity = None
    if config.command == "audit" and (config.relevancy_delta is not None or config.relevancy_strict):
        relevancy_delta = config.relevancy_delta
        if relevancy_delta is None:
            relevancy_delta = config.delta if config.delta is not None else Fraction(0)
        relevancy_similarity = _similarity(model, relevancy_delta, config.relevancy_strict, "--relevancy-delta")

    sample = load_instance(config.instance_path, model)
    problem = make_problem(model, sample, similarity)
    bound = _bound(config)
    logger.info("Problem %s with %s", problem.fingerprint[:12], problem.similarity.describe())

    if config.command in ("axp", "cxp"):
        find = one_axp if config.command == "axp" else one_cxp
        explanation = find(problem, order=order, bound=bound)
        return explanation.to_dict(), [explanation.format(space)] + _render_trace(explanation, space)

    if config.command == "enumerate":
        state = enumerate_explanations(problem, limit=config.limit, bound=bound)
        lines = [x.format(space) for x in state.axps] + [y.format(space) for y in state.cxps]
        lines += [
            f"relevant: {space.format_set(state.relevant())}",
            f"necessary: {space.format_set(state.necessary())}",
            f"exhausted: {'yes' if state.exhausted else 'no'}",
        ]
        return state.to_dict(), lines

    if config.command == "relevancy":
        report = relevant_features(problem, limit=config.limit, bound=bound)
        return report.to_dict(), report.format(space).splitlines()

    if config.command == "shap":
        report = shap_all(problem, ledger=config.ledger, max_features=config.max_shap_features)
        return report.to_dict(space), _shap_lines(report, space)

    if config.command == "audit":
        report = audit(problem, relevancy_similarity=relevancy_similarity, allow_mismatch=config.allow_mismatch,
                       limit=config.limit, max_features=config.max_shap_features, ledger=config.ledger)
        lines = _shap_lines(report.shap, space)
        lines.append(f"relevancy similarity: {report.similarity.describe()}")
        for finding in report.findings:
            relevancy = "relevant" if finding.relevant else "irrelevant"
            lines.append(f"{space.feature(finding.feature).name}: {relevancy}, "
                         f"score {format_rational_text(finding.score)} -> {finding.flag}")
        return report.to_dict(space), lines

    if config.command == "inflate":
        explanation = one_axp(problem, order=order)
        inflated = inflate(problem, explanation)
        return inflated.to_dict(model), [inflated.render(model)]

    # robust
    query = AdversarialQuery(norm=config.norm, eps=config.eps, fixed=frozenset(fixed))
    witness = find_adversarial_example(problem, query)
    record = {
        "norm": str(config.norm),
        "eps": "unbounded" if config.eps is None else format_rational(config.eps),
        "fixed": sorted(fixed),
        "witness": None if witness is None else witness.to_dict(),
    }
    if witness is None:
        lines = [f"no adversarial example within {query.bound.describe()} fixing {space.format_set(fixed)}"]
    else:
        lines = [f"adversarial example: {space.format_point(witness.point)} -> "
                 f"{model.format_output(witness.output)} at distance {format_rational_text(witness.distance)}"]
    return record, lines


def run(config: CliConfig, stdout: Optional[TextIO] = None, stderr: Optional[TextIO] = None) -> int:
    """Run one query; the report goes to `stdout`, a one-line error to `stderr`."""
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    try:
        check_config(config)
        record, lines = _execute(config)
    except UsageError as exc:
        return _fail(stderr, EXIT_USAGE, str(exc))
    except ModelValidationError as exc:
        return _fail(stderr, EXIT_INVALID, f"invalid model: {exc}")
    except InfeasibleQueryError as exc:
        return _fail(stderr, EXIT_INFEASIBLE, str(exc))
    except CapExceededError as exc:
        return _fail(stderr, EXIT_CAP, str(exc))
    except (ModelError, ValueError, OSError) as exc:
        return _fail(stderr, EXIT_INVALID, str(exc))

    if config.output == "structured":
        stdout.write(canonical_json_dumps(record) + "\n")
    else:
        stdout.write("\n".join(lines) + "\n")
    if config.out:
        try:
            write_report(record, config.out)
        except OSError as exc:
            return _fail(stderr, EXIT_INVALID, f"could not write {config.out}: {exc}")
    return EXIT_OK


def _fail(stderr: TextIO, code: int, message: str) -> int:
    logger.error("Exiting with status %d", code)
    stderr.write(f"error: {message}\n")
    return code


# ──────────────────────────────────────────────
# Main entry point
# ──────────────────────────────────────────────

def _rational(raw: str) -> Fraction:
    try:
        return parse_rational(raw)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _norm(raw: str):
    try:
        return parse_norm(raw)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _eps(raw: str):
    try:
        return parse_eps(raw)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _ids(raw: str) -> Tuple[str, ...]:
    return tuple(token.strip() for token in raw.split(",") if token.strip())


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--model", required=True, help="Model file (JSON)")
    common.add_argument("--instance", default=None, help="Instance file (JSON)")
    common.add_argument("--delta", type=_rational, default=None, help="Similarity threshold for regression, e.g. 1/2 (default: 0)")
    common.add_argument("--strict", action="store_true", help="Treat |delta| = threshold as a change")
    common.add_argument("--order", type=_ids, default=None, help="Feature order for deletion, e.g. 3,1,2 or x3,x1,x2")
    common.add_argument("--norm", type=_norm, default=0, help="Distance norm: 0, 1 or inf (default: 0)")
    common.add_argument("--eps", type=_eps, default=None, help="Distance radius p/q or 'unbounded' (default: unbounded)")
    common.add_argument("--fix", type=_ids, default=(), help="Features held at the instance value (robust)")
    common.add_argument("--output", choices=OUTPUTS, default="text", help="Report format (default: text)")
    common.add_argument("--limit", type=int, default=None, help="Stop enumeration after this many explanations")
    common.add_argument("--max-shap-features", type=int, default=DEFAULT_MAX_SHAP_FEATURES,
                        help=f"Largest feature count for exact SHAP (default: {DEFAULT_MAX_SHAP_FEATURES})")
    common.add_argument("--ledger", action="store_true", help="Include every SHAP contribution row")
    common.add_argument("--out", default=None, help="Also write the structured report to this file")
    common.add_argument("--relevancy-delta", type=_rational, default=None, help="Threshold for the audit's relevancy side")
    common.add_argument("--relevancy-strict", action="store_true", help="Strict comparison for the audit's relevancy side")
    common.add_argument("--allow-mismatch", action="store_true", help="Audit with a different relevancy similarity")
    common.add_argument("--verbose", action="store_true", help="Debug logging on stderr")

    parser = _Parser(prog="fxp", description="Formal explanations and exact SHAP scores for tree models")
    commands = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        commands.add_parser(name, parents=[common])
    return parser


def config_from_args(args: argparse.Namespace) -> CliConfig:
    return CliConfig(
        command=args.command,
        model_path=args.model,
        instance_path=args.instance,
        delta=args.delta,
        strict=args.strict,
        order=args.order,
        norm=args.norm,
        eps=args.eps,
        fix=args.fix,
        output=args.output,
        limit=args.limit,
        max_shap_features=args.max_shap_features,
        ledger=args.ledger,
        out=args.out,
        relevancy_delta=args.relevancy_delta,
        relevancy_strict=args.relevancy_strict,
        allow_mismatch=args.allow_mismatch,
        verbose=args.verbose,
    )


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_USAGE
    config = config_from_args(args)

    logging.basicConfig(
        level=logging.DEBUG if config.verbose else logging.WARNING,
        format="%(asctime)s [%(levelname)s] %(message)s",
        datefmt="%H:%M:%S",
    )
    return run(config)


if __name__ == "__main__":
    sys.exit(main())
