"""Operator command line: sampling runs, diagnostics, corpus prep,
distribution comparisons, n-gram train/sample, and oracle verification.

Exit codes: 0 success, 1 usage, 2 data/format, 3 backend/transport,
4 oracle failure.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import math
import os
import sys

import numpy as np

from . import __version__
from .chains import (RNG_NAME, ChainConfig, ChainRecord, TruncationMarker,
                     read_chain_jsonl, run_chain, write_chain_jsonl)
from .core import NEG_INF, TokenSequence, Vocabulary
from .diagnostics import acf_profile, edit_rate_profile
from .errors import (BackendError, DataFormatError, GsnProbeError,
                     NonConvergenceError, OracleFailure, UsageError)
from .ngram import NgramConditionalModel, NgramModel, sample_sentence, train_kn
from .remote import ENDPOINT_ENV_VAR, ModelEndpoint, RemoteConditionalModel
from .stats import (FrequencyTable, dependency_lengths, ingest_conllu,
                    label_frequency_comparison, length_cdf, production_ratio,
                    spearman_rank_correlation, zipf_table)
from .svgchart import write_chart
from .tabular import (ExactJoint, TabularModel, derive_conditionals,
                      fixed_order_transition_matrix, gsn_transition_matrix,
                      load_fixture, mh_target_distribution, mh_transition_matrix,
                      stationary_distribution, tv_distance)
from .wordpiece import SentencePool, WordPieceVocab, build_pool


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _sha256(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 16), b""):
            digest.update(block)
    return digest.hexdigest()


def _write_manifest(out_dir, subcommand: str, config: dict, inputs: list,
                    outputs: list, fingerprint: str | None = None) -> None:
    manifest = {
        "tool": "gsnprobe",
        "version": __version__,
        "subcommand": subcommand,
        "config": config,
        "rng": RNG_NAME,
        "model_fingerprint": fingerprint,
        "inputs": {str(p): _sha256(p) for p in inputs if os.path.isfile(p)},
        "outputs": {os.path.basename(str(p)): _sha256(p) for p in outputs},
    }
    path = os.path.join(out_dir, "manifest.json")
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, sort_keys=True, indent=2)
        fh.write("\n")


def _load_config_file(path) -> dict:
    """key=value lines (TOML-style scalars); '#' starts a comment."""
    values = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{lineno}: expected key=value, got {raw.strip()!r}")
            key, value = (part.strip() for part in line.split("=", 1))
            value = value.strip("\"'")
            values[key.replace("-", "_")] = value
    return values


def _apply_config_defaults(parser: argparse.ArgumentParser, argv: list[str]) -> list[str]:
    probe = _Parser(add_help=False)
    probe.add_argument("--config")
    known, _ = probe.parse_known_args(argv)
    if known.config:
        raw = _load_config_file(known.config)
        coerced = {}
        for key, value in raw.items():
            try:
                coerced[key] = int(value)
            except ValueError:
                try:
                    coerced[key] = float(value)
                except ValueError:
                    coerced[key] = value
        # subparsers parse into a fresh namespace, so defaults must be
        # planted on every one of them, not just the root parser
        for target in [parser] + getattr(parser, "subparsers", []):
            target.set_defaults(**coerced)
    return argv


def _resolve_backend(spec: str | None, args):
    """Backend spec: tabular:FIXTURE.json | ngram:MODEL.json | remote[:URL]."""
    if not spec:
        raise UsageError("--backend is required (tabular:PATH | ngram:PATH | remote[:URL])")
    kind, _, rest = spec.partition(":")
    if kind == "tabular":
        if not rest:
            raise UsageError("tabular backend needs a fixture path: tabular:PATH")
        _, cond = load_fixture(rest)
        model = TabularModel(cond)
        if args.length is not None and args.length != cond.n:
            raise UsageError(f"--length {args.length} != tabular fixture length {cond.n}")
        return model, rest
    if kind == "ngram":
        if not rest:
            raise UsageError("ngram backend needs a model path: ngram:PATH")
        if args.length is None:
            raise UsageError("--length is required for the ngram backend")
        return NgramConditionalModel(NgramModel.load(rest), args.length), rest
    if kind == "remote":
        url = rest or os.environ.get(ENDPOINT_ENV_VAR, "")
        if not url:
            raise UsageError(f"remote backend needs a URL (remote:URL or ${ENDPOINT_ENV_VAR})")
        if not args.vocab:
            raise UsageError("--vocab is required for the remote backend")
        if args.length is None:
            raise UsageError("--length is required for the remote backend")
        vocab = Vocabulary.from_file(args.vocab)
        endpoint = ModelEndpoint(base_url=url, timeout=args.timeout)
        return RemoteConditionalModel(endpoint, vocab, args.length), url
    raise UsageError(f"unknown backend kind {kind!r}")


def cmd_sample(args) -> int:
    model, _ = _resolve_backend(args.backend, args)
    order = tuple(int(x) for x in args.order.split(",")) if args.order else None
    config = ChainConfig(epochs=args.epochs, burn_in=args.burn_in, lag=args.lag,
                         epsilon=args.epsilon, kernel=args.kernel, order=order,
                         seed=args.seed)
    init = None
    if args.init:
        init = TokenSequence(tuple(int(x) for x in args.init.split(",")))
    os.makedirs(args.out, exist_ok=True)
    out_path = os.path.join(args.out, "chains.jsonl")
    meta = {
        "config": config.to_json(),
        "chains": args.chains,
        "model": model.fingerprint(),
        "rng": RNG_NAME,
        "tool_version": __version__,
    }
    workers = args.workers if model.thread_safe else 1
    if workers > 1 and args.chains > 1:
        from concurrent.futures import ThreadPoolExecutor

        def one_chain(chain_id: int) -> list:
            return list(run_chain(model, config, init=init, chain_id=chain_id))

        with ThreadPoolExecutor(max_workers=workers) as pool:
            per_chain = list(pool.map(one_chain, range(args.chains)))
    else:
        per_chain = [list(run_chain(model, config, init=init, chain_id=cid))
                     for cid in range(args.chains)]
    # deterministic merge: full per-chain streams in chain-id order
    records = [rec for stream in per_chain for rec in stream]
    truncated = sum(isinstance(rec, TruncationMarker) for rec in records)
    write_chain_jsonl(out_path, meta, records)
    _write_manifest(args.out, "sample", vars_config(args), _input_paths(args),
                    [out_path], fingerprint=model.fingerprint())
    n_records = sum(isinstance(r, ChainRecord) for r in records)
    print(f"wrote {n_records} records ({truncated} truncations) to {out_path}")
    return 0


def vars_config(args) -> dict:
    skip = {"func"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


def _input_paths(args) -> list[str]:
    paths = []
    for key in ("backend",):
        spec = getattr(args, key, None)
        if spec and ":" in spec:
            kind, _, rest = spec.partition(":")
            if kind in ("tabular", "ngram"):
                paths.append(rest)
    for key in ("vocab", "sample", "reference", "fixture", "input", "conllu_a",
                "conllu_b", "model", "denylist"):
        value = getattr(args, key, None)
        if value and isinstance(value, str):
            paths.append(value)
    return paths


def _write_csv(path, header: list[str], rows) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def _fmt_energy(e: float) -> str:
    return "-inf" if e == NEG_INF else repr(float(e))


def cmd_diagnose(args) -> int:
    by_chain: dict[int, list[ChainRecord]] = {}
    for path in args.chains_files:
        _, records = read_chain_jsonl(path)
        for rec in records:
            if isinstance(rec, TruncationMarker):
                continue
            if rec.energy is None:
                raise DataFormatError(f"{path}: record without energy field")
            by_chain.setdefault(rec.chain_id, []).append(rec)
    if not by_chain:
        raise DataFormatError("no chain records found")
    os.makedirs(args.out, exist_ok=True)
    outputs = []

    series_rows = []
    energy_series = []
    edits_series = []
    summary_rows = []
    for chain_id in sorted(by_chain):
        records = sorted(by_chain[chain_id], key=lambda r: r.epoch)
        epochs = [r.epoch for r in records]
        energies = [r.energy for r in records]
        edits = [r.edits for r in records]
        for r in records:
            series_rows.append([r.chain_id, r.epoch, _fmt_energy(r.energy), r.edits,
                                r.epochs_since_reset])
        energy_series.append((f"chain {chain_id}", epochs, energies))
        edits_series.append((f"chain {chain_id}", epochs, edits))
        profile = edit_rate_profile(edits)
        resets = sum(1 for r in records if r.epochs_since_reset == 0 and r.epoch > 0)
        summary_rows.append([chain_id, len(records), profile.max_zero_run, resets])

    series_path = os.path.join(args.out, "series.csv")
    _write_csv(series_path, ["chain", "epoch", "energy", "edits", "since_reset"], series_rows)
    outputs.append(series_path)

    acf_rows = []
    acf_series = []
    lags = list(range(0, args.max_lag + 1, args.lag_step))
    for chain_id in sorted(by_chain):
        records = sorted(by_chain[chain_id], key=lambda r: r.epoch)
        energies = [r.energy for r in records]
        usable = [lag for lag in lags if lag < len(energies)]
        results = acf_profile(energies, usable)
        for res in results:
            acf_rows.append([chain_id, res.lag,
                             "" if res.r is None else repr(res.r), res.n_pairs])
        pts = [(res.lag, res.r) for res in results if res.r is not None]
        if pts:
            acf_series.append((f"chain {chain_id}", [p[0] for p in pts], [p[1] for p in pts]))
    acf_path = os.path.join(args.out, "acf.csv")
    _write_csv(acf_path, ["chain", "lag", "r", "n_pairs"], acf_rows)
    outputs.append(acf_path)

    summary_path = os.path.join(args.out, "summary.csv")
    _write_csv(summary_path, ["chain", "records", "max_zero_edit_run", "resets_observed"],
               summary_rows)
    outputs.append(summary_path)

    for name, data, ylabel in (("energy.svg", energy_series, "energy"),
                               ("edits.svg", edits_series, "edits per epoch")):
        path = os.path.join(args.out, name)
        write_chart(path, data, title=name[:-4], xlabel="epoch", ylabel=ylabel)
        outputs.append(path)
    if acf_series:
        path = os.path.join(args.out, "acf.svg")
        write_chart(path, acf_series, title="energy autocorrelation", xlabel="lag",
                    ylabel="r")
        outputs.append(path)

    _write_manifest(args.out, "diagnose", vars_config(args), list(args.chains_files), outputs)
    print(f"diagnostics for {len(by_chain)} chain(s) written to {args.out}")
    return 0


def _load_sentences(path) -> list[str]:
    if os.path.isdir(path):
        pool = SentencePool.load(path)
        return pool.sentences()
    if str(path).endswith(".jsonl"):
        _, records = read_chain_jsonl(path)
        return [r.text for r in records if isinstance(r, ChainRecord)]
    with open(path, encoding="utf-8") as fh:
        return [line.strip() for line in fh if line.strip()]


def cmd_compare(args) -> int:
    sample_sentences = _load_sentences(args.sample)
    reference_sentences = _load_sentences(args.reference)
    if not sample_sentences or not reference_sentences:
        raise DataFormatError("both corpora must be nonempty")
    table_a = FrequencyTable.from_tokens(w for s in sample_sentences for w in s.split())
    table_b = FrequencyTable.from_tokens(w for s in reference_sentences for w in s.split())
    os.makedirs(args.out, exist_ok=True)
    outputs = []

    rows = zipf_table(table_a, table_b)
    zipf_path = os.path.join(args.out, "zipf.csv")
    _write_csv(zipf_path, ["label", "rank_a", "freq_a", "rank_b", "freq_b"],
               [[r.label, r.rank_a, repr(r.freq_a), r.rank_b, repr(r.freq_b)] for r in rows])
    outputs.append(zipf_path)
    if rows:
        zipf_svg = os.path.join(args.out, "zipf.svg")
        pts_a = [(math.log10(r.rank_a), math.log10(r.freq_a)) for r in rows if r.freq_a > 0]
        pts_b = [(math.log10(r.rank_b), math.log10(r.freq_b)) for r in rows if r.freq_b > 0]
        write_chart(
            zipf_svg,
            [("sample", [p[0] for p in pts_a], [p[1] for p in pts_a]),
             ("reference", [p[0] for p in pts_b], [p[1] for p in pts_b])],
            title="zipf (log10 rank vs log10 freq)", xlabel="log10 rank",
            ylabel="log10 freq", mode="scatter")
        outputs.append(zipf_svg)
        ranks_svg = os.path.join(args.out, "ranks.svg")
        write_chart(
            ranks_svg,
            [("shared labels", [r.rank_b for r in rows], [r.rank_a for r in rows])],
            title="word ranks: sample vs reference", xlabel="reference rank",
            ylabel="sample rank", mode="scatter")
        outputs.append(ranks_svg)

    spearman_rows = []
    for label, mc in (("all", 1), (f"min_count>{args.min_count - 1}", args.min_count)):
        rho = spearman_rank_correlation(table_a, table_b, min_count=mc)
        n_shared = len([l for l in table_a.counts
                        if l in table_b.counts and table_a.counts[l] >= mc
                        and table_b.counts[l] >= mc])
        spearman_rows.append([label, mc, "" if rho is None else repr(rho), n_shared])
    spearman_path = os.path.join(args.out, "spearman.csv")
    _write_csv(spearman_path, ["filter", "min_count", "rho", "n_shared"], spearman_rows)
    outputs.append(spearman_path)

    ratios = production_ratio(table_a, table_b, smoothing=args.smoothing)
    prod_path = os.path.join(args.out, "production.csv")
    _write_csv(prod_path, ["label", "log_ratio"], [[l, repr(v)] for l, v in ratios])
    outputs.append(prod_path)

    if args.conllu_a and args.conllu_b:
        parses_a = ingest_conllu(args.conllu_a)
        parses_b = ingest_conllu(args.conllu_b)
        for kind in ("pos", "dep"):
            rows = label_frequency_comparison(parses_a, parses_b, kind=kind)
            path = os.path.join(args.out, f"{kind}.csv")
            _write_csv(path, ["label", "rel_a", "rel_b", "difference"],
                       [[r.label, repr(r.rel_a), repr(r.rel_b), repr(r.difference)]
                        for r in rows])
            outputs.append(path)
            svg = os.path.join(args.out, f"{kind}.svg")
            write_chart(
                svg,
                [("labels", [r.rel_b for r in rows], [r.rel_a for r in rows]),
                 ("parity", [0.0, max(r.rel_b for r in rows)],
                  [0.0, max(r.rel_b for r in rows)])],
                title=f"{kind} relative frequencies (off-diagonal = mismatch)",
                xlabel="reference", ylabel="sample", mode="scatter")
            outputs.append(svg)
        cdf_series = []
        cdf_rows = []
        for name, parses in (("sample", parses_a), ("reference", parses_b)):
            pooled = [d for s in parses for d in dependency_lengths(s).distances]
            cdf = length_cdf(pooled)
            for value, frac in cdf:
                cdf_rows.append([name, value, repr(frac)])
            if cdf:
                cdf_series.append((name, [v for v, _ in cdf], [f for _, f in cdf]))
        cdf_path = os.path.join(args.out, "deplen_cdf.csv")
        _write_csv(cdf_path, ["corpus", "distance", "cum_prob"], cdf_rows)
        outputs.append(cdf_path)
        if cdf_series:
            svg = os.path.join(args.out, "deplen_cdf.svg")
            write_chart(svg, cdf_series, title="dependency length CDF",
                        xlabel="distance", ylabel="cumulative probability")
            outputs.append(svg)

    _write_manifest(args.out, "compare", vars_config(args), _input_paths(args), outputs)
    rho_all = spearman_rows[0][2]
    print(f"compare: spearman(all)={rho_all or 'undefined'} over "
          f"{spearman_rows[0][3]} shared labels; outputs in {args.out}")
    return 0


def _oracle_battery(cond, joint) -> tuple[list[str], bool]:
    lines = []
    ok = True

    def check(name: str, value: float, threshold: float, comparison: str) -> None:
        nonlocal ok
        if comparison == "<=":
            passed = value <= threshold
        else:
            passed = value > threshold
        ok = ok and passed
        lines.append(f"{name}: {value:.3e} [{comparison} {threshold:g}] "
                     f"{'PASS' if passed else 'FAIL'}")

    gsn = gsn_transition_matrix(cond)
    pi_gsn = stationary_distribution(gsn)
    if joint is not None:
        check("TV(gsn stationary, joint)", tv_distance(pi_gsn, joint.probs), 1e-8, "<=")

    n = cond.n
    orders = [tuple(range(n)), tuple(reversed(range(n)))]
    pis = [stationary_distribution(fixed_order_transition_matrix(cond, o)) for o in orders]
    spread = tv_distance(pis[0], pis[1])
    if joint is not None:
        check("TV between sweep orders (consistent: expect ~0)", spread, 1e-8, "<=")
    else:
        check("TV between sweep orders (inconsistent: expect > 0.01)", spread, 0.01, ">")

    mh = mh_transition_matrix(cond)
    pi_mh = stationary_distribution(mh)
    target = mh_target_distribution(cond)
    check("TV(mh stationary, exp-energy target)", tv_distance(pi_mh, target), 1e-8, "<=")
    if joint is not None:
        lines.append(f"TV(gsn, joint)={tv_distance(pi_gsn, joint.probs):.3e} vs "
                     f"TV(mh, joint)={tv_distance(pi_mh, joint.probs):.3e}")
    return lines, ok


def cmd_oracle(args) -> int:
    if args.random:
        V, n, seed = (int(x) for x in args.random)
        joint = ExactJoint.random_dirichlet(V, n, seed)
        cond = derive_conditionals(joint)
        source = f"random V={V} n={n} seed={seed}"
    elif args.fixture:
        joint, cond = load_fixture(args.fixture)
        source = args.fixture
    else:
        raise UsageError("oracle needs --fixture PATH or --random V N SEED")
    try:
        lines, ok = _oracle_battery(cond, joint)
    except NonConvergenceError as exc:
        raise OracleFailure(f"stationary computation failed: {exc}") from exc
    header = [f"oracle battery over {source} "
              f"({'consistent (joint supplied)' if joint is not None else 'conditionals only'})"]
    report = "\n".join(header + lines) + "\n"
    print(report, end="")
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        path = os.path.join(args.out, "report.txt")
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(report)
        _write_manifest(args.out, "oracle", vars_config(args), _input_paths(args), [path])
    if not ok:
        raise OracleFailure("oracle battery reported FAIL lines")
    return 0


def cmd_pool(args) -> int:
    vocab = WordPieceVocab.from_file(args.vocab)
    lengths = {int(x) for x in args.lengths.split(",")}
    denylist = None
    if args.denylist:
        with open(args.denylist, encoding="utf-8") as fh:
            denylist = {line.strip() for line in fh if line.strip()}
    with open(args.input, encoding="utf-8") as fh:
        pool = build_pool(fh, vocab, lengths, source=args.source,
                          lowercase=not args.no_lowercase, denylist=denylist)
    pool.save(args.out)
    outputs = [os.path.join(args.out, name) for name in sorted(os.listdir(args.out))
               if name != "manifest.json"]
    _write_manifest(args.out, "pool", vars_config(args), _input_paths(args), outputs)
    counts = {n: len(pool.buckets[n]) for n in sorted(pool.buckets)}
    print(f"pool {args.source!r}: bucket sizes {counts}, "
          f"rejections {dict(sorted(pool.rejections.items()))}")
    return 0


def cmd_ngram_train(args) -> int:
    with open(args.input, encoding="utf-8") as fh:
        model = train_kn(fh, order=args.order, discount=args.discount)
    model.save(args.out)
    print(f"trained order-{args.order} model over {len(model.vocab)} words -> {args.out}")
    return 0


def cmd_ngram_sample(args) -> int:
    model = NgramModel.load(args.model)
    rng = np.random.default_rng(args.seed)
    lines = [" ".join(sample_sentence(model, args.length, rng))
             for _ in range(args.count)]
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write("\n".join(lines) + "\n")
    else:
        for line in lines:
            print(line)
    return 0


def build_parser() -> _Parser:
    parser = _Parser(prog="gsnprobe", description=__doc__)
    parser.add_argument("--config", help="key=value config file; flags override it")
    parser.add_argument("--version", action="version", version=f"gsnprobe {__version__}")
    parser.subparsers = []
    sub = parser.add_subparsers(dest="command", required=True)

    def add_parser(*args, **kwargs):
        child = sub.add_parser(*args, **kwargs)
        parser.subparsers.append(child)
        return child

    p = add_parser("sample", help="run sampling chains, write JSONL")
    p.add_argument("--backend", help="tabular:FIXTURE | ngram:MODEL | remote[:URL]")
    p.add_argument("--kernel", default="gsn", choices=["gsn", "fixed-order", "mh"])
    p.add_argument("--length", type=int, default=None)
    p.add_argument("--epochs", type=int, default=50_000)
    p.add_argument("--burn-in", dest="burn_in", type=int, default=1000)
    p.add_argument("--lag", type=int, default=500)
    p.add_argument("--epsilon", type=float, default=0.001)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--chains", type=int, default=1)
    p.add_argument("--order", default=None, help="comma-separated site order (fixed-order)")
    p.add_argument("--init", default=None, help="comma-separated initial token ids")
    p.add_argument("--vocab", default=None, help="local vocabulary file (remote backend)")
    p.add_argument("--timeout", type=float, default=30.0)
    p.add_argument("--workers", type=int, default=1,
                   help="parallel chains (forced to 1 for single-threaded backends)")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_sample)

    p = add_parser("diagnose", help="convergence/independence diagnostics over chain JSONL")
    p.add_argument("chains_files", nargs="+")
    p.add_argument("--max-lag", dest="max_lag", type=int, default=50)
    p.add_argument("--lag-step", dest="lag_step", type=int, default=1)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_diagnose)

    p = add_parser("compare", help="distributional comparison of two corpora")
    p.add_argument("--sample", required=True, help="chain JSONL, pool dir, or text file")
    p.add_argument("--reference", required=True, help="pool dir or text file")
    p.add_argument("--min-count", dest="min_count", type=int, default=10)
    p.add_argument("--smoothing", type=float, default=1e-9)
    p.add_argument("--conllu-a", dest="conllu_a", default=None)
    p.add_argument("--conllu-b", dest="conllu_b", default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_compare)

    p = add_parser("oracle", help="tabular sampling-theory verification battery")
    p.add_argument("--fixture", default=None)
    p.add_argument("--random", nargs=3, metavar=("V", "N", "SEED"), default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_oracle)

    p = add_parser("pool", help="build a length-bucketed sentence pool")
    p.add_argument("--input", required=True, help="one sentence per line")
    p.add_argument("--vocab", required=True)
    p.add_argument("--lengths", required=True, help="comma-separated token lengths")
    p.add_argument("--source", default="corpus")
    p.add_argument("--denylist", default=None)
    p.add_argument("--no-lowercase", dest="no_lowercase", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_pool)

    p = add_parser("ngram-train", help="train the Kneser-Ney baseline")
    p.add_argument("--input", required=True)
    p.add_argument("--order", type=int, default=5)
    p.add_argument("--discount", type=float, default=0.75)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_ngram_train)

    p = add_parser("ngram-sample", help="sample sentences from a trained model")
    p.add_argument("--model", required=True)
    p.add_argument("--length", type=int, default=10)
    p.add_argument("--count", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_ngram_sample)
    return parser


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        _apply_config_defaults(parser, argv)
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except DataFormatError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except BackendError as exc:
        print(f"backend error: {exc}", file=sys.stderr)
        return 3
    except OracleFailure as exc:
        print(f"oracle failure: {exc}", file=sys.stderr)
        return 4
    except GsnProbeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
