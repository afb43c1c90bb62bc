"""Command-line front end: ``osdkit <subcommand> [flags]``.

Every subcommand writes CSV (one header row, 10 significant digits) to stdout
or ``--out``.  ``--config file.ini`` supplies defaults from the section named
after the subcommand (or ``[DEFAULT]``); explicit flags win.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import io
import math
import os
import sys
from typing import Callable

import numpy as np

EXIT_OK, EXIT_NUMERIC, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.10g}"
    return str(v)


def _emit(header: list[str], rows: list[list], out) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(x) for x in r])
    text = buf.getvalue()
    if out:
        with open(out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _floats(text: str) -> list[float]:
    return [float(x) for x in str(text).replace(",", " ").split()]


def _sigma(snr):
    from .channel import snr_db_to_sigma

    return snr_db_to_sigma(snr)


# --- subcommands ------------------------------------------------------------------------------


def cmd_bounds(a):
    from .bounds import GuessworkQuery, evaluate

    rows = []
    q = "optimize" if a.q in ("auto", "optimize") else float(a.q)
    for snr in _floats(a.snr_db):
        k = a.k
        m = a.m if a.m is not None else k
        query = GuessworkQuery(n=a.n, k=k, a=a.a, b=a.b, omega=a.omega, m=m, sigma=_sigma(snr), method=a.method, q=q)
        res = evaluate(query)
        rows.append([snr, a.n, k if k is not None else "", m if m is not None else "", a.omega, a.method,
                     res.q_used if res.q_used is not None else "", res.value])
    return ["snr_db", "n", "k", "m", "omega", "method", "q", "value"], rows


def cmd_pe(a):
    from .orderstats import mrb_error_prob

    if a.k >= a.n:
        raise UsageError("need k < n")
    snrs = _floats(a.snr_db)
    if a.sweep:
        rows = [[s, a.n, a.k] + [mrb_error_prob(a.n, a.k, _sigma(s), f) for f in ("exact", "normal-approx", "asymptotic")] for s in snrs]
        return ["snr_db", "n", "k", "pe_exact", "pe_normal", "pe_asym"], rows
    rows = []
    for s in snrs:
        pe = mrb_error_prob(a.n, a.k, _sigma(s), a.fidelity)
        rows.append([s, a.n, a.k, a.fidelity, pe, a.k * math.sqrt(pe), math.ceil(a.k * math.sqrt(pe) - 1e-9)])
    return ["snr_db", "n", "k", "fidelity", "pe", "k_sqrt_pe", "m_s"], rows


def cmd_guesswork_sim(a):
    from .guesswork_sim import simulate_segment_moments

    lo = a.a if a.a is not None else 1
    hi = a.b if a.b is not None else a.n
    rows = []
    for s in _floats(a.snr_db):
        est, se = simulate_segment_moments(lo, hi, a.n, _sigma(s), a.strategy, a.omega, a.trials, a.seed,
                                           a.within_order, a.threads, ordered=not a.iid)
        rows.append([a.n, lo, hi, s, a.strategy, a.omega, a.trials, est, se])
    return ["n", "a", "b", "snr_db", "strategy", "omega", "trials", "estimate", "stderr"], rows


def cmd_decode_sim(a):
    from .codes import CRC6, parse_code_spec
    from .osd import simulate_decoder

    G = parse_code_spec(a.code, a.seed)
    crc = None if a.no_crc else CRC6
    rows = []
    for s in _floats(a.snr_db):
        st = simulate_decoder(G, s, a.m, a.mode, a.blocks, a.seed, lam=a.lam, alpha=a.alpha, crc=crc,
                              within_order=a.within_order, threads=a.threads)
        rows.append([s, st.bler, st.avg_guesses, st.max_guesses, st.p50_guesses, st.p99_guesses])
    return ["snr_db", "bler", "avg_guesses", "max_guesses", "p50_guesses", "p99_guesses"], rows


def cmd_harq_sim(a):
    from .harq import HarqScheme, simulate_harq

    try:
        scheme = HarqScheme.parse(a.scheme, lam=a.lam)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    rows = []
    for s in _floats(a.snr_db_list):
        st = simulate_harq(scheme, s, a.blocks, a.seed)
        rows.append([s, st.bler, st.r1_avg_guesses, st.r1_max, st.r2_avg_guesses, st.r2_max, st.avg_eff_n])
    return ["snr_db", "bler", "r1_avg_guesses", "r1_max", "r2_avg_guesses", "r2_max", "avg_eff_n"], rows


def cmd_tep(a):
    from .osd import tep_at, tep_count

    if a.count or a.rank is None:
        return ["k", "m", "count"], [[a.k, a.m, tep_count(a.k, a.m)]]
    t = tep_at(a.rank, a.k, within_order=a.within_order)
    return ["k", "rank", "weight", "pattern"], [[a.k, t.rank, t.weight, "".join(map(str, t.pattern))]]


TABLE1_RATES = [(1, 8), (1, 4), (1, 3), (3, 8), (1, 2), (5, 8), (2, 3), (3, 4), (7, 8)]


def table1_rows(snr_db: float, fidelity: str = "normal-approx") -> list[list]:
    """k sqrt(p_e) over the rate grid, with n = 128 fixed and with k = 64 fixed."""
    from .orderstats import mrb_error_prob

    rows = []
    for num, den in TABLE1_RATES:
        row = [f"{num}/{den}"]
        for n, k in ((128, 128 * num / den), (64 * den / num, 64)):
            if abs(k - round(k)) > 1e-9 or abs(n - round(n)) > 1e-9:
                row += ["", "", ""]
                continue
            n, k = int(round(n)), int(round(k))
            pe = mrb_error_prob(n, k, _sigma(snr_db), fidelity)
            row += [n, k, k * math.sqrt(pe)]
        rows.append(row)
    return rows


def cmd_table1(a):
    return ["rate", "n_fixed_n", "k_fixed_n", "k_sqrt_pe_fixed_n", "n_fixed_k", "k_fixed_k", "k_sqrt_pe_fixed_k"], table1_rows(a.snr_db, a.fidelity)


# --- figure recipes -----------------------------------------------------------------------------


def _fig_arikan(a):
    from .bounds import arikan_bounds, bsc_joint

    rows = [[n] + list(arikan_bounds(n, 1.0, bsc_joint(0.05))) for n in range(1, 17)]
    return ["n", "arikan_lower", "arikan_upper"], rows


def _fig_hamming_iid(a):
    from .bounds import hamming_subset_bound_iid, optimize_q
    from .guesswork_sim import simulate_iid_moments

    rows = []
    for n in (4, 8, 12, 16, 20):
        q, v = optimize_q(lambda x: hamming_subset_bound_iid(n, 1.0, x, _sigma(0.0)).value)
        sim, se = simulate_iid_moments(n, _sigma(0.0), "hamming", 1.0, a.trials, a.seed)
        opt, se2 = simulate_iid_moments(n, _sigma(0.0), "optimal", 1.0, a.trials, a.seed)
        rows.append([n, q, v, sim, se, opt, se2])
    return ["n", "q", "hamming_subset_bound", "sim_hamming", "sim_hamming_se", "sim_optimal", "sim_optimal_se"], rows


def _fig_segment_q(a):
    from .bounds import ordered_segment_bound

    rows = []
    for q in np.round(np.arange(1.05, 3.0001, 0.05), 4):
        rows.append([q] + [ordered_segment_bound(16, 32, 64, w, float(q), _sigma(3.0)).value for w in (1.0, 2.0)])
    return ["q", "bound_omega1", "bound_omega2"], rows


def _fig_segment_n(a):
    from .bounds import optimize_q, ordered_arikan_bounds, ordered_segment_bound
    from .guesswork_sim import simulate_segment_moments

    rows = []
    for n in (16, 32, 48, 64, 80):
        lo, hi = n // 4, n // 2
        s = _sigma(3.0)
        q, v = optimize_q(lambda x: ordered_segment_bound(lo, hi, n, 1.0, x, s).value)
        al, au = ordered_arikan_bounds(lo, hi, n, 1.0, s)
        sh, _ = simulate_segment_moments(lo, hi, n, s, "hamming", 1.0, a.trials, a.seed)
        so, _ = simulate_segment_moments(lo, hi, n, s, "optimal", 1.0, a.trials, a.seed)
        rows.append([n, lo, hi, q, v, al, au, sh, so])
    return ["n", "a", "b", "q", "ordered_bound", "arikan_lower", "arikan_upper", "sim_hamming", "sim_optimal"], rows


def _fig_osd_snr(a):
    from .bounds import osd_guesswork_bound
    from .codes import random_code
    from .osd import simulate_decoder

    G = random_code(64, 32, a.seed)
    rows = []
    for snr in (0.0, 1.0, 2.0, 3.0):
        s = _sigma(snr)
        vals = [osd_guesswork_bound(64, 32, 32, 1.0, s, meth).value for meth in ("ordered-exact", "simplified", "bessel", "arikan-lower", "arikan-upper")]
        st = simulate_decoder(G, snr, 32, "genie", a.trials, a.seed, crc=None, within_order="lexicographic")
        rows.append([snr] + vals + [st.avg_guesses])
    return ["snr_db", "ordered_exact", "simplified", "bessel", "arikan_lower", "arikan_upper", "sim_genie"], rows


def _fig_saturation(a):
    from .bounds import osd_guesswork_bound

    s = _sigma(2.0)
    return ["m", "simplified"], [[m, osd_guesswork_bound(128, 64, m, 1.0, s, "simplified").value] for m in range(0, 17)]


def _fig_bler(a):
    from .bounds import na_bler, osd_bler
    from .codes import build_ebch
    from .osd import simulate_decoder

    G = build_ebch(7, 10)
    rows = []
    for snr in (0.0, 1.0, 2.0, 3.0):
        s = _sigma(snr)
        st = simulate_decoder(G, snr, 4, "genie", a.blocks, a.seed, crc=None)
        rows.append([snr, na_bler(128, 64, s), osd_bler(128, 64, 4, s), st.bler])
    return ["snr_db", "na_bound", "osd_bler_no_ml", "sim_genie_bler"], rows


def _fig_ccc(a):
    from .codes import build_ebch
    from .osd import simulate_decoder

    G = build_ebch(7, 10)
    rows = []
    for snr in (2.0, 2.5, 3.0):
        base = simulate_decoder(G, snr, 4, "identify", a.blocks, a.seed, lam=0.5)
        ccc = simulate_decoder(G, snr, 4, "ccc", a.blocks, a.seed, lam=0.5, alpha=0.8)
        rows.append([snr, base.bler, base.avg_guesses, base.max_guesses, ccc.bler, ccc.avg_guesses, ccc.max_guesses])
    return ["snr_db", "bler", "avg_guesses", "max_guesses", "ccc_bler", "ccc_avg_guesses", "ccc_max_guesses"], rows


def _fig_harq(a):
    from .harq import SCHEME_1, SCHEME_2, simulate_harq

    rows = []
    for snr in (-1.0, 0.0, 1.0):
        for name, sch in (("scheme1", SCHEME_1), ("scheme2", SCHEME_2)):
            st = simulate_harq(sch, snr, a.blocks, a.seed)
            rows.append([name, snr, st.bler, st.r1_avg_guesses, st.r2_avg_guesses, st.avg_eff_n])
    return ["scheme", "snr_db", "bler", "r1_avg_guesses", "r2_avg_guesses", "avg_eff_n"], rows


FIGURES: dict[str, tuple[Callable, str, str]] = {
    "arikan-bsc": (_fig_arikan, "arikan_bounds", "Arikan bounds for a BSC(0.05) against n"),
    "hamming-iid": (_fig_hamming_iid, "hamming_subset_bound_iid, optimize_q, simulate_iid_moments", "i.i.d. bound and simulations at 0 dB"),
    "segment-q": (_fig_segment_q, "ordered_segment_bound", "segment [16,32] of n=64 at 3 dB against q"),
    "segment-n": (_fig_segment_n, "ordered_segment_bound, ordered_arikan_bounds, simulate_segment_moments", "segment [n/4,n/2] against n"),
    "osd-snr": (_fig_osd_snr, "osd_guesswork_bound, simulate_decoder(genie)", "order-k guesswork of a (64,32) code against SNR"),
    "saturation": (_fig_saturation, "osd_guesswork_bound(simplified)", "simplified bound against order at (128,64), 2 dB"),
    "bler": (_fig_bler, "na_bler, osd_bler, simulate_decoder(genie)", "(128,64) eBCH BLER against SNR"),
    "ccc": (_fig_ccc, "simulate_decoder(identify, ccc), ccc_cutoff", "guess statistics with and without the cutoff"),
    "harq": (_fig_harq, "simulate_harq", "two-round HARQ scheme comparison"),
}


def cmd_figure(a):
    if a.list or not a.name:
        return ["figure", "operations", "description"], [[k, v[1], v[2]] for k, v in FIGURES.items()]
    if a.name not in FIGURES:
        raise UsageError(f"unknown figure {a.name!r}; see figure --list")
    return FIGURES[a.name][0](a)


# --- parser ---------------------------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _common(p):
    p.add_argument("--out", default=None, help="write CSV here instead of stdout")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=os.cpu_count() or 1)
    p.add_argument("--config", default=None, help="INI file with defaults")


def build_parser() -> argparse.ArgumentParser:
    from .bounds import METHODS

    root = _Parser(prog="osdkit", description="Ordered statistics decoding and guesswork bounds")
    sub = root.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("bounds", help="evaluate a guesswork bound")
    p.add_argument("--method", choices=METHODS, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--k", type=int)
    p.add_argument("--m", type=int)
    p.add_argument("--a", type=int, help="segment start (1-based)")
    p.add_argument("--b", type=int, help="segment end (1-based)")
    p.add_argument("--omega", type=float, default=1.0)
    p.add_argument("--snr-db", default="2", help="one value or a comma list")
    p.add_argument("--q", default="auto")
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("pe", help="MRB bit-error probability")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--snr-db", default="2")
    p.add_argument("--fidelity", choices=("exact", "normal-approx", "asymptotic"), default="exact")
    p.add_argument("--sweep", action="store_true", help="all three fidelities per SNR")
    p.set_defaults(func=cmd_pe)

    p = sub.add_parser("guesswork-sim", help="Monte Carlo guesswork moments")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--a", type=int)
    p.add_argument("--b", type=int)
    p.add_argument("--snr-db", default="3")
    p.add_argument("--strategy", choices=("optimal", "hamming"), default="hamming")
    p.add_argument("--omega", type=float, default=1.0)
    p.add_argument("--trials", type=int, default=100_000)
    p.add_argument("--within-order", choices=("reliability", "lexicographic"), default="lexicographic")
    p.add_argument("--iid", action="store_true", help="no reliability ordering")
    p.set_defaults(func=cmd_guesswork_sim)

    p = sub.add_parser("decode-sim", help="OSD link simulation")
    p.add_argument("--code", default="ebch:7,10")
    p.add_argument("--m", type=int, default=4)
    p.add_argument("--mode", choices=("genie", "identify", "ccc"), default="identify")
    p.add_argument("--lambda", dest="lam", type=float, default=0.5)
    p.add_argument("--alpha", type=float, default=0.8)
    p.add_argument("--snr-db", default="3")
    p.add_argument("--blocks", type=int, default=10_000)
    p.add_argument("--within-order", choices=("reliability", "lexicographic"), default="reliability")
    p.add_argument("--no-crc", action="store_true")
    p.set_defaults(func=cmd_decode_sim)

    p = sub.add_parser("harq-sim", help="two-round IR-HARQ simulation")
    p.add_argument("--scheme", required=True, help="n1,m1,n2,m2")
    p.add_argument("--lambda", dest="lam", type=float, default=0.75)
    p.add_argument("--snr-db-list", default="0")
    p.add_argument("--blocks", type=int, default=10_000)
    p.set_defaults(func=cmd_harq_sim)

    p = sub.add_parser("tep", help="TEP counts and patterns")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--m", type=int, default=None)
    p.add_argument("--rank", type=int)
    p.add_argument("--count", action="store_true")
    p.add_argument("--within-order", choices=("reliability", "lexicographic"), default="reliability")
    p.set_defaults(func=cmd_tep)

    p = sub.add_parser("table1", help="k sqrt(p_e) grid")
    p.add_argument("--snr-db", type=float, default=2.0)
    p.add_argument("--fidelity", choices=("exact", "normal-approx", "asymptotic"), default="normal-approx")
    p.set_defaults(func=cmd_table1)

    p = sub.add_parser("figure", help="regenerate figure data")
    p.add_argument("name", nargs="?")
    p.add_argument("--list", action="store_true")
    p.add_argument("--trials", type=int, default=20_000)
    p.add_argument("--blocks", type=int, default=2_000)
    p.set_defaults(func=cmd_figure)

    for sp in sub.choices.values():
        _common(sp)
    return root


def _apply_config(parser, argv):
    """Pre-parse --config and install its keys as subcommand defaults."""
    if "--config" not in argv and not any(s.startswith("--config=") for s in argv):
        return
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    cp = configparser.ConfigParser()
    if not cp.read(known.config):
        raise UsageError(f"cannot read config {known.config!r}")
    cmd = next((a for a in argv if not a.startswith("-")), None)
    sub = parser._subparsers._group_actions[0].choices.get(cmd) if cmd else None
    if sub is None:
        return
    section = cp[cmd] if cp.has_section(cmd) else cp.defaults()
    dests = {act.dest: act for act in sub._actions}
    values = {}
    for key, raw in section.items():
        dest = key.replace("-", "_")
        dest = "lam" if dest == "lambda" else dest
        if dest not in dests:
            raise UsageError(f"unknown config key {key!r}")
        act = dests[dest]
        if isinstance(act, argparse._StoreTrueAction):
            values[dest] = raw.strip().lower() in ("1", "true", "yes", "on")
        else:
            values[dest] = act.type(raw) if act.type else raw
            act.required = False
    sub.set_defaults(**values)


def run(argv=None) -> int:
    from .orderstats import QuadratureError

    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        _apply_config(parser, argv)
        args = parser.parse_args(argv)
        if not getattr(args, "command", None):
            raise UsageError(parser.format_usage().strip())
        if args.command == "tep" and args.m is None:
            args.m = args.k
        header, rows = args.func(args)
        _emit(header, rows, args.out)
    except UsageError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_USAGE
    except (QuadratureError, ArithmeticError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"invalid parameters: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return EXIT_OK


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
