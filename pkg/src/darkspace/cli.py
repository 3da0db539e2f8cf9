"""Command-line interface.

Subcommands
-----------
validate
    Check a channel file for square shapes and Kraus completeness.
numrange
    Rank-k numerical range of a Hermitian or unitary matrix, with optional
    compression certificate (Hermitian) and CSV/SVG region export (unitary).
findcode
    Run one of the constructive code finders and write code + certificate.
klcheck
    Classify a (channel, code) pair: NotDark / Dark / CompletelyDark /
    DecoherenceFree, with the full residual table.
decode
    Build a strong or weak decoder and verify the observable round trip.
simulate
    Sampled darkness or restoration experiment with a fixed seed.
examples
    Run the three built-in worked examples end to end and print a
    pass/fail matrix.

Exit codes: 0 success, 1 invalid input (shapes, kinds, gates on the data),
2 unreadable or unparsable files/flags, 3 mathematical refusal (no code
exists, class insufficient, statistical gate failed).  Angles are radians.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import serialize
from .channels import Instrument, KrausChannel, biased_permutation_channel, ref_channel
from .codes import (
    ProtectionClass,
    biased_permutation_dark_code,
    biunitary_code,
    check_knill_laflamme,
    rank2_dark_code,
    rebase_invariance_audit,
    triunitary_code,
)
from .errors import (
    AlphaNotPSDError,
    AuditFailedError,
    CertificateError,
    DarkspaceError,
    DegeneratePairMismatchError,
    DegenerateSpectrumError,
    LambdaOutOfRangeError,
    NoCodeError,
    NotCompletelyDarkError,
    NotDarkError,
    NotFoundError,
    ParallelChordsError,
    PhaseOutOfRangeError,
    SymmetryViolatedError,
)
from .linalg import DEFAULT_TOL, Isometry, haar_unitary
from .numrange import (
    hermitian_compression,
    hermitian_rank_range,
    joint_compression,
    unitary_rank_range_outer,
)
from .recovery import (
    build_strong_decoder,
    build_weak_decoder,
    conjugate_compression_audit,
    verify_roundtrip,
)
from .simulator import (
    TrajectoryConfig,
    run_darkness_experiment,
    run_restoration_experiment,
)

#: Mathematical "no" — the inputs were well formed but the answer is
#: negative (no code, class too weak, gate failed).  Mapped to exit 3.
MATH_NO = (
    NotFoundError,
    NoCodeError,
    NotDarkError,
    NotCompletelyDarkError,
    LambdaOutOfRangeError,
    DegenerateSpectrumError,
    ParallelChordsError,
    DegeneratePairMismatchError,
    SymmetryViolatedError,
    PhaseOutOfRangeError,
    AlphaNotPSDError,
    CertificateError,
    AuditFailedError,
)

ROUNDTRIP_GATE = 1e-9


def _emit(args, doc: dict, human: str) -> None:
    if getattr(args, "json", False):
        print(json.dumps(doc, indent=2))
    else:
        print(human)


def _fmt_floats(values, digits=6):
    return "[" + ", ".join(f"{float(v):.{digits}g}" for v in values) + "]"


# ----------------------------------------------------------------- validate

def cmd_validate(args) -> int:
    try:
        doc = serialize.load(args.channel)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    try:
        channel = serialize.channel_from_json(doc)
    except (ValueError, DarkspaceError) as exc:
        print(f"invalid channel: {exc}", file=sys.stderr)
        return 1
    stack = np.array(channel.kraus)
    gram = np.einsum("iba,ibc->ac", stack.conj(), stack)
    residual = float(np.abs(gram - np.eye(channel.dim)).max())
    _emit(args, {"dim": channel.dim, "num_kraus": channel.num_kraus,
                 "completeness_residual": residual, "valid": True},
          f"valid channel: dim={channel.dim} operators={channel.num_kraus} "
          f"completeness residual={residual:.3e}")
    return 0


# ----------------------------------------------------------------- numrange

def cmd_numrange(args) -> int:
    matrix = serialize.matrix_from_json(serialize.load(args.matrix))
    if args.kind == "hermitian":
        interval = hermitian_rank_range(matrix, args.k)
        doc = {"kind": "hermitian", "k": args.k,
               "interval": [interval.lo, interval.hi]}
        human = f"rank-{args.k} range: [{interval.lo:.12g}, {interval.hi:.12g}]"
        if args.value is not None:
            cert = hermitian_compression(matrix, args.k, args.value,
                                         pairing=args.pairing)
            doc["value"] = args.value
            doc["pairing"] = args.pairing
            doc["residual"] = cert.residual
            doc["isometry"] = serialize.isometry_to_json(cert.isometry)
            human += (f"\ncompression to {args.value:.12g} ({args.pairing} pairing): "
                      f"residual={cert.residual:.3e}")
        _emit(args, doc, human)
        return 0

    region = unitary_rank_range_outer(matrix, args.k)
    inner = region.inner_points
    eigs = np.linalg.eigvals(matrix)
    doc = {"kind": "unitary", "k": args.k, "region": region.kind,
           "vertices": [[float(z.real), float(z.imag)] for z in region.vertices],
           "certified_inner_points": [[float(z.real), float(z.imag)] for z in inner]}
    human = (f"rank-{args.k} outer bound: {region.kind} with "
             f"{len(region.vertices)} vertices; "
             f"{len(inner)} certified interior points")
    if args.emit:
        csv_path, svg_path = args.emit + ".csv", args.emit + ".svg"
        with open(csv_path, "w", encoding="utf-8") as fh:
            fh.write(serialize.region_to_csv(region))
        with open(svg_path, "w", encoding="utf-8") as fh:
            fh.write(serialize.region_to_svg(region, eigs))
        doc["files"] = [csv_path, svg_path]
        human += f"\nwrote {csv_path} and {svg_path}"
    _emit(args, doc, human)
    return 0


# ----------------------------------------------------------------- findcode

def parse_cycles(text: str, n: int) -> list:
    """Parse cycle notation like ``(1,2)(3,4)`` into 0-based images.

    Uses the convention of the biased-permutation examples: the matrix of
    cycle ``(c1, c2, ...)`` sends basis vector ``c2`` to ``c1``.
    """
    images = list(range(n))
    body = text.strip()
    if not body.startswith("("):
        raise ValueError(f"cycle notation must start with '(': {text!r}")
    for chunk in body.replace(")(", ")|(").split("|"):
        chunk = chunk.strip()
        if not (chunk.startswith("(") and chunk.endswith(")")):
            raise ValueError(f"malformed cycle {chunk!r}")
        try:
            cycle = [int(tok) - 1 for tok in chunk[1:-1].split(",")]
        except ValueError as exc:
            raise ValueError(f"malformed cycle {chunk!r}") from exc
        if any(c < 0 or c >= n for c in cycle):
            raise ValueError(f"cycle {chunk!r} out of range for dimension {n}")
        for u, v in zip(cycle, cycle[1:] + cycle[:1]):
            images[v] = u
    return images


def _biased_channel_from_doc(doc) -> KrausChannel:
    if "kraus" in doc:
        return serialize.channel_from_json(doc)
    if "S" not in doc or "perms" not in doc:
        raise ValueError("biased-permutation file needs 'S' and 'perms' (or 'kraus')")
    s = np.asarray(doc["S"], dtype=float)
    n = s.shape[1]
    perms = []
    for entry in doc["perms"]:
        if isinstance(entry, str):
            perms.append(parse_cycles(entry, n))
        else:
            perms.append([int(v) for v in entry])
    return biased_permutation_channel(s, perms)


def cmd_findcode(args) -> int:
    channel = None
    if args.family == "triunitary":
        if args.alpha is None or args.xi is None:
            print("error: --family triunitary needs --alpha and --xi", file=sys.stderr)
            return 2
        frame = None
        if args.frame_seed is not None:
            rng = np.random.default_rng(args.frame_seed)
            frame = haar_unitary(3 * args.num_phases, rng)
        weights = tuple(args.weights) if args.weights else (0.5, 0.25, 0.25)
        channel, code, cert = triunitary_code(
            args.alpha, args.xi, code_size=args.num_phases,
            frame=frame, weights=weights)
    else:
        if args.channel is None:
            print("error: this family needs a channel file", file=sys.stderr)
            return 2
        doc = serialize.load(args.channel)
        if args.family == "biasedperm":
            channel = _biased_channel_from_doc(doc)
            code, cert = biased_permutation_dark_code(channel)
        elif args.family == "rank2":
            channel = serialize.channel_from_json(doc)
            code, cert = rank2_dark_code(channel)
        elif args.family == "biunitary":
            channel = serialize.channel_from_json(doc)
            code, cert = biunitary_code(channel)
        else:  # joint
            channel = serialize.channel_from_json(doc)
            povm = [a.conj().T @ a for a in channel.kraus]
            code = joint_compression(povm, args.k)
            cert = check_knill_laflamme(channel, code)

    doc = {
        "family": args.family,
        "code": serialize.isometry_to_json(code),
        "certificate": serialize.certificate_to_json(cert),
    }
    human = (f"{args.family}: class={cert.klass.label} "
             f"code {code.ambient_dim}x{code.code_dim} "
             f"lambdas={_fmt_floats(cert.lambdas)}")
    if args.out_code:
        serialize.dump(serialize.isometry_to_json(code), args.out_code)
        human += f"\nwrote {args.out_code}"
    if args.out_cert:
        serialize.dump(serialize.certificate_to_json(cert), args.out_cert)
        human += f"\nwrote {args.out_cert}"
    if args.out_channel:
        serialize.dump(serialize.channel_to_json(channel), args.out_channel)
        human += f"\nwrote {args.out_channel}"
    _emit(args, doc, human)
    return 0


# ------------------------------------------------------------------ klcheck

def cmd_klcheck(args) -> int:
    channel = serialize.channel_from_json(serialize.load(args.channel))
    code = serialize.isometry_from_json(serialize.load(args.code))
    cert = check_knill_laflamme(channel, code, tol=args.tol)
    doc = serialize.certificate_to_json(cert)
    lines = [f"class: {cert.klass.label}",
             f"lambdas: {_fmt_floats(cert.lambdas)}"]
    if cert.entropy is not None:
        lines.append(f"entropy: {cert.entropy:.12g}")
    for name, value in sorted(cert.residuals.items()):
        lines.append(f"residual[{name}]: {value:.3e}")
    if args.out_cert:
        serialize.dump(doc, args.out_cert)
        lines.append(f"wrote {args.out_cert}")
    _emit(args, doc, "\n".join(lines))
    return 0


# ------------------------------------------------------------------- decode

def cmd_decode(args) -> int:
    channel = serialize.channel_from_json(serialize.load(args.channel))
    code = serialize.isometry_from_json(serialize.load(args.code))
    if args.mode == "strong":
        decoder = build_strong_decoder(channel, code)
    else:
        decoder = build_weak_decoder(channel, code)
    report = verify_roundtrip(channel, code, decoder, report_tol=ROUNDTRIP_GATE)
    doc = {"decoder": serialize.decoder_to_json(decoder),
           "roundtrip_residual": report.max_residual,
           "passed": report.passed}
    human = (f"{args.mode} decoder with {len(decoder.operators)} operators; "
             f"round-trip residual={report.max_residual:.3e} "
             f"({'pass' if report.passed else 'FAIL'})")
    if args.out_decoder:
        serialize.dump(serialize.decoder_to_json(decoder), args.out_decoder)
        human += f"\nwrote {args.out_decoder}"
    _emit(args, doc, human)
    return 0 if report.passed else 3


# ----------------------------------------------------------------- simulate

def cmd_simulate(args) -> int:
    inst = serialize.instrument_from_json(serialize.load(args.channel))
    code = serialize.isometry_from_json(serialize.load(args.code))
    config = TrajectoryConfig(trials=args.trials, seed=args.seed)
    if args.experiment == "darkness":
        report = run_darkness_experiment(inst, code, config)
    else:
        if args.decoder is None:
            print("error: restoration needs a decoder file", file=sys.stderr)
            return 2
        decoder = serialize.decoder_from_json(serialize.load(args.decoder))
        report = run_restoration_experiment(inst, code, decoder, config)
    doc = serialize.report_to_json(report)
    lines = [f"{report.kind}: trials={report.trials} seed={report.seed}",
             f"counts: {list(map(int, report.outcome_counts))}",
             f"expected: {_fmt_floats(report.expected_probabilities)}"]
    if report.p_value is not None:
        lines.append(f"chi-square p-value: {report.p_value:.4g}")
    if report.max_pairwise_sigma is not None:
        lines.append(f"max pairwise deviation: {report.max_pairwise_sigma:.2f} sigma")
    if report.min_fidelity is not None:
        lines.append(f"fidelity: min={report.min_fidelity:.12f} "
                     f"mean={report.mean_fidelity:.12f}")
    lines.append("pass" if report.passed else "FAIL")
    if args.out_report:
        serialize.dump(doc, args.out_report)
        lines.append(f"wrote {args.out_report}")
    _emit(args, doc, "\n".join(lines))
    return 0 if report.passed else 3


# ----------------------------------------------------------------- examples

BIAS_ROWS = [[0.05, 0.10, 0.30, 0.35],
             [0.04, 0.08, 0.32, 0.36],
             [0.91, 0.82, 0.38, 0.29]]
BIAS_CYCLES = ["(1,2,3,4)", "(1,2)(3,4)", "(1,4,3,2)"]


def _example_biased_permutation(seed: int):
    s = np.array(BIAS_ROWS)
    perms = [parse_cycles(c, 4) for c in BIAS_CYCLES]
    channel = biased_permutation_channel(s, perms)
    code, cert = biased_permutation_dark_code(channel)
    steps = [("dark with values (0.2, 0.2, 0.6)",
              cert.klass >= ProtectionClass.DARK
              and np.allclose(cert.lambdas, (0.2, 0.2, 0.6), atol=1e-10))]
    kl = check_knill_laflamme(channel, code)
    steps.append(("not correctable (cross residual > 1e-3)",
                  kl.klass == ProtectionClass.DARK
                  and kl.residuals["cross"] > 1e-3))
    decoder = build_weak_decoder(channel, code)
    rt = verify_roundtrip(channel, code, decoder)
    steps.append(("outcome-wise round trip", rt.passed))
    sim = run_restoration_experiment(channel, code, decoder,
                                     TrajectoryConfig(trials=2000, seed=seed))
    steps.append(("sampled restoration fidelity", sim.passed))
    return steps


def _example_biunitary(seed: int):
    rng = np.random.default_rng(seed)
    frame = haar_unitary(4, rng)
    u = frame @ np.diag([1.0, 1.0j, -1.0, -1.0j]) @ frame.conj().T
    q = 0.3
    channel = ref_channel([np.eye(4), u], [q, 1.0 - q])
    code, cert = biunitary_code(channel)
    steps = [("correctable pair code", cert.klass >= ProtectionClass.COMPLETELY_DARK),
             ("environment state (0.3, 0.7)",
              cert.alpha is not None
              and np.allclose(np.sort(np.linalg.eigvalsh(cert.alpha)), [0.3, 0.7],
                              atol=1e-9))]
    decoder = build_strong_decoder(channel, code, cert)
    rt = verify_roundtrip(channel, code, decoder)
    steps.append(("observable round trip", rt.passed))
    audit = conjugate_compression_audit(channel, code, decoder)
    steps.append(("complementary-channel scalars", audit.passed))
    return steps


def _example_triunitary(alpha: float, xi: float, seed: int):
    channel, code, cert = triunitary_code(alpha, xi, code_size=2)
    steps = [("correctable triple code",
              cert.klass >= ProtectionClass.COMPLETELY_DARK)]
    decoder = build_strong_decoder(channel, code, cert)
    rt = verify_roundtrip(channel, code, decoder)
    steps.append(("observable round trip", rt.passed))
    audit = rebase_invariance_audit(channel, code, trials=10, seed=seed)
    steps.append(("operator-sum frame invariance", audit.passed))
    return steps


def cmd_examples(args) -> int:
    results = []
    results.append(("biased-permutation", _example_biased_permutation(args.seed)))
    results.append(("bi-unitary", _example_biunitary(args.seed)))
    results.append(("tri-unitary", _example_triunitary(args.alpha, args.xi, args.seed)))
    doc = {"workflows": [
        {"name": name, "steps": [{"step": s, "passed": bool(ok)} for s, ok in steps]}
        for name, steps in results
    ]}
    lines = []
    all_ok = True
    for name, steps in results:
        for step, ok in steps:
            all_ok = all_ok and ok
            lines.append(f"{'PASS' if ok else 'FAIL'}  {name}: {step}")
    doc["passed"] = all_ok
    _emit(args, doc, "\n".join(lines))
    return 0 if all_ok else 3


# -------------------------------------------------------------------- parser

def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="darkspace",
        description="Dark subspaces, correctable codes and decoders for "
                    "Kraus channels.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check a channel file")
    p.add_argument("channel")
    p.add_argument("--json", action="store_true")
    p.set_defaults(handler=cmd_validate)

    p = sub.add_parser("numrange", help="rank-k numerical range")
    p.add_argument("matrix")
    p.add_argument("--k", type=int, default=1)
    p.add_argument("--kind", choices=("hermitian", "unitary"), default="hermitian")
    p.add_argument("--value", type=float, default=None,
                   help="Hermitian only: also certify a compression to this value")
    p.add_argument("--pairing", choices=("mirror", "offset"), default="mirror")
    p.add_argument("--emit", metavar="PREFIX",
                   help="unitary only: write PREFIX.csv and PREFIX.svg")
    p.add_argument("--json", action="store_true")
    p.set_defaults(handler=cmd_numrange)

    p = sub.add_parser("findcode", help="run a constructive code finder")
    p.add_argument("channel", nargs="?",
                   help="channel JSON (omit for --family triunitary)")
    p.add_argument("--family", required=True,
                   choices=("rank2", "biasedperm", "biunitary", "triunitary", "joint"))
    p.add_argument("--k", type=int, default=2, help="code dimension for --family joint")
    p.add_argument("--alpha", type=float, help="tri-unitary phase, radians")
    p.add_argument("--xi", type=float, help="tri-unitary detuning span, radians")
    p.add_argument("--num-phases", type=int, default=2, metavar="K",
                   help="tri-unitary code dimension")
    p.add_argument("--weights", type=float, nargs=3, metavar=("W1", "W2", "W3"))
    p.add_argument("--frame-seed", type=int, default=None,
                   help="conjugate the tri-unitary family by a seeded random frame")
    p.add_argument("--out-code")
    p.add_argument("--out-cert")
    p.add_argument("--out-channel")
    p.add_argument("--json", action="store_true")
    p.set_defaults(handler=cmd_findcode)

    p = sub.add_parser("klcheck", help="classify a channel/code pair")
    p.add_argument("channel")
    p.add_argument("code")
    p.add_argument("--tol", type=float, default=DEFAULT_TOL)
    p.add_argument("--out-cert")
    p.add_argument("--json", action="store_true")
    p.set_defaults(handler=cmd_klcheck)

    p = sub.add_parser("decode", help="build a decoder and verify the round trip")
    p.add_argument("channel")
    p.add_argument("code")
    p.add_argument("--mode", choices=("strong", "weak"), required=True)
    p.add_argument("--out-decoder")
    p.add_argument("--json", action="store_true")
    p.set_defaults(handler=cmd_decode)

    p = sub.add_parser("simulate", help="sampled darkness/restoration experiment")
    p.add_argument("channel")
    p.add_argument("code")
    p.add_argument("decoder", nargs="?",
                   help="decoder JSON (restoration only)")
    p.add_argument("--experiment", choices=("darkness", "restoration"),
                   default="darkness")
    p.add_argument("--trials", type=int, default=10000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-report")
    p.add_argument("--json", action="store_true")
    p.set_defaults(handler=cmd_simulate)

    p = sub.add_parser("examples", help="run the built-in worked examples")
    p.add_argument("--alpha", type=float, default=2.0 * np.pi / 3.0)
    p.add_argument("--xi", type=float, default=np.pi / 6.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--json", action="store_true")
    p.set_defaults(handler=cmd_examples)

    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.handler(args)
    except MATH_NO as exc:
        print(f"no: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3
    except DarkspaceError as exc:
        print(f"invalid input: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
