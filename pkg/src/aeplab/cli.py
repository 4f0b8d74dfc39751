"""Command-line front end: a thin client of the service layer.

Every command builds a request, sends it through the HTTP API, and writes the
response body verbatim (CSV or binary) to stdout or --out.  By default the
app runs in-process over an ASGI transport, so no server is needed; --server
points the same client at a running instance instead.

Exit codes: 0 success, 2 configuration/validation error, 3 resource cap
exceeded.  Seeds are mandatory for stochastic commands; there is no
wall-clock default.
"""

from __future__ import annotations

import argparse
import asyncio
import base64
import sys

import httpx

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_CAP = 3


def _int_list(text: str) -> list[int]:
    try:
        return [int(tok) for tok in text.split(",") if tok != ""]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _float_list(text: str) -> list[float]:
    try:
        return [float(tok) for tok in text.split(",") if tok != ""]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated reals, got {text!r}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="aeplab",
        description="Typicality laboratory for discrete memoryless channels.",
    )
    parser.add_argument(
        "--server",
        default=None,
        help="URL of a running aeplab service; default runs the app in-process",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, seed_required=True, rates=None, single_rate=False):
        p.add_argument("--channel", required=True, help="channel spec file")
        p.add_argument("--epsilon", type=float, default=None)
        p.add_argument("--out", default=None, help="output file (default stdout)")
        if rates:
            if single_rate:
                p.add_argument("--R", type=float, default=None)
            else:
                p.add_argument("--R", type=_float_list, default=None, metavar="R[,R...]")
        if seed_required:
            p.add_argument("--seed", type=int, required=True)

    p = sub.add_parser("info", help="single-letter quantities and capacity")
    p.add_argument("--channel", required=True)

    p = sub.add_parser("typical-set", help="typical type classes and set size")
    add_common(p, seed_required=False)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--side", choices=["input", "output"], default="output")

    cb = sub.add_parser("codebook", help="codebook generation and checking")
    cbsub = cb.add_subparsers(dest="subcommand", required=True)
    p = cbsub.add_parser("gen", help="generate a codebook file")
    add_common(p, rates=True, single_rate=True)
    p.add_argument("--n", type=int, required=True)
    p = cbsub.add_parser("check", help="typical/regular statistics of a codebook file")
    p.add_argument("--channel", required=True)
    p.add_argument("--codebook", required=True)
    p.add_argument("--epsilon", type=float, default=None)
    p.add_argument("--out", default=None)

    aep = sub.add_parser("aep", help="theorem and lemma experiments")
    aepsub = aep.add_subparsers(dest="subcommand", required=True)
    schemas = {
        "theorem1": (
            "equipartition of the conditional output law; CSV columns: "
            "n,R,codebook_idx,spread,l_min,l_max,l_mean,max_dev_h0y,"
            "mass_typical,mass_atypical,zero_mass_typical,positive_typical"
        ),
        "theorem2": (
            "typical-codebook statistics; CSV columns: n,codebooks,"
            "pass_fraction,median_sup_deviation,max_sup_deviation,threshold,"
            "delta_eps,vc_deviation_bound"
        ),
        "theorem3": (
            "conditional entropy rate per codebook; CSV columns: "
            "n,codebook_idx,H_rate_exact,stderr,ref_H0Y,ref_RplusH0YgX"
        ),
        "lemma6": (
            "input entropy rate given the codebook; CSV columns: n,codebooks,"
            "mean_input_entropy_rate,target_rate,regular_fraction"
        ),
        "fano": (
            "maximum-likelihood decoding checks; CSV columns: n,codebook_idx,"
            "p_error,h_w_given_y,fano_bound,holds"
        ),
    }
    for name, single in [
        ("theorem1", False),
        ("theorem2", True),
        ("theorem3", True),
        ("lemma6", True),
        ("fano", True),
    ]:
        p = aepsub.add_parser(name, description=schemas[name], help=schemas[name].split(";")[0])
        add_common(p, rates=True, single_rate=single)
        p.add_argument("--n", type=_int_list, required=True, metavar="N[,N...]")
        p.add_argument("--codebooks", type=int, default=20)
        p.add_argument("--trials", type=int, default=1000)
        p.add_argument("--workers", type=int, default=1)
    p = aepsub.add_parser(
        "lemma4",
        description=(
            "joint typicality of the conditioned input process; CSV columns: "
            "n,prob_jointly_typical,method,trials,stderr"
        ),
        help="joint typicality probability per block length",
    )
    add_common(p)
    p.add_argument("--n", type=_int_list, required=True, metavar="N[,N...]")
    p.add_argument("--trials", type=int, default=10000)
    p.add_argument("--mc", action="store_true", help="force the Monte Carlo estimator")

    relay = sub.add_parser("relay", help="compression scenarios")
    relaysub = relay.add_subparsers(dest="subcommand", required=True)
    p = relaysub.add_parser(
        "compare",
        description=(
            "compression with/without codebook knowledge; CSV columns: "
            "n,scenario_a_rate,a_rate_minus_h0y,r2_low,err_low_mean,"
            "r2_high,err_high_mean"
        ),
        help="compare the two compression scenarios",
    )
    add_common(p, rates=True, single_rate=True)
    p.add_argument("--n", type=_int_list, required=True, metavar="N[,N...]")
    p.add_argument("--codebooks", type=int, default=20)
    p.add_argument("--workers", type=int, default=1)

    p = sub.add_parser(
        "sweep",
        description=(
            "conditional entropy rate over a rate grid; CSV columns: "
            "R,n,mean_H_rate,ref_H0Y,ref_RplusH0YgX,regime"
        ),
        help="conditional entropy rate over a rate grid",
    )
    add_common(p, rates=True)
    p.add_argument("--n", type=_int_list, required=True, metavar="N[,N...]")
    p.add_argument("--codebooks", type=int, default=20)
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--workers", type=int, default=1)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)

    return parser


def _read_channel(path: str) -> str:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        print(f"error: cannot read channel spec: {exc}", file=sys.stderr)
        raise SystemExit(EXIT_CONFIG) from None


def _request(server: str | None, method: str, path: str, payload: dict) -> httpx.Response:
    if server:
        try:
            with httpx.Client(base_url=server, timeout=None) as client:
                return client.request(method, path, json=payload)
        except httpx.HTTPError as exc:
            print(f"error: cannot reach server: {exc}", file=sys.stderr)
            raise SystemExit(EXIT_CONFIG) from None

    async def go():
        from .service.app import create_app

        transport = httpx.ASGITransport(app=create_app())
        async with httpx.AsyncClient(
            transport=transport, base_url="http://aeplab.local", timeout=None
        ) as client:
            return await client.request(method, path, json=payload)

    return asyncio.run(go())


def _handle(resp: httpx.Response, out: str | None, binary: bool = False) -> int:
    if resp.status_code == 200:
        if binary:
            if out is None:
                sys.stdout.buffer.write(resp.content)
            else:
                with open(out, "wb") as fh:
                    fh.write(resp.content)
        else:
            if out is None:
                sys.stdout.write(resp.text)
            else:
                with open(out, "w", encoding="utf-8", newline="") as fh:
                    fh.write(resp.text)
        return EXIT_OK
    try:
        detail = resp.json().get("detail", resp.text)
    except ValueError:
        detail = resp.text
    print(f"error: {detail}", file=sys.stderr)
    if resp.status_code == 413:
        return EXIT_CAP
    return EXIT_CONFIG


def _experiment_payload(args, single_rate: bool) -> dict:
    payload = {
        "spec_text": _read_channel(args.channel),
        "n_grid": args.n,
        "seed": args.seed,
    }
    if args.epsilon is not None:
        payload["epsilon"] = args.epsilon
    rate = getattr(args, "R", None)
    if rate is not None:
        payload["rates"] = [rate] if single_rate else list(rate)
    for key in ("codebooks", "trials", "workers"):
        if hasattr(args, key):
            payload[key] = getattr(args, key)
    return payload


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)

    if args.command == "serve":
        import uvicorn

        from .service.app import create_app

        uvicorn.run(create_app(), host=args.host, port=args.port)
        return EXIT_OK

    if args.command == "info":
        resp = _request(args.server, "POST", "/channel/info", {"spec_text": _read_channel(args.channel)})
        if resp.status_code != 200:
            return _handle(resp, None)
        st = resp.json()
        lines = [
            f"H0(X)={st['h0_x']:.12g}",
            f"H0(Y)={st['h0_y']:.12g}",
            f"H0(X,Y)={st['h0_xy']:.12g}",
            f"H0(Y|X)={st['h0_y_given_x']:.12g}",
            f"I0(X;Y)={st['i0_xy']:.12g}",
            f"C={st['capacity']:.12g}",
            "capacity_input="
            + " ".join(f"{sym}:{p:.12g}" for sym, p in st["capacity_input"].items()),
        ]
        print("\n".join(lines))
        return EXIT_OK

    if args.command == "typical-set":
        payload = {
            "spec_text": _read_channel(args.channel),
            "n": args.n,
            "side": args.side,
        }
        if args.epsilon is not None:
            payload["epsilon"] = args.epsilon
        return _handle(_request(args.server, "POST", "/typical-set", payload), args.out)

    if args.command == "codebook" and args.subcommand == "gen":
        payload = {
            "spec_text": _read_channel(args.channel),
            "n": args.n,
            "seed": args.seed,
        }
        if args.epsilon is not None:
            payload["epsilon"] = args.epsilon
        if args.R is not None:
            payload["rate"] = args.R
        if args.out is None:
            print("error: codebook gen requires --out", file=sys.stderr)
            return EXIT_CONFIG
        return _handle(
            _request(args.server, "POST", "/codebook/generate", payload), args.out, binary=True
        )

    if args.command == "codebook" and args.subcommand == "check":
        try:
            with open(args.codebook, "rb") as fh:
                raw = fh.read()
        except OSError as exc:
            print(f"error: cannot read codebook file: {exc}", file=sys.stderr)
            return EXIT_CONFIG
        payload = {
            "spec_text": _read_channel(args.channel),
            "codebook_b64": base64.b64encode(raw).decode("ascii"),
        }
        if args.epsilon is not None:
            payload["epsilon"] = args.epsilon
        return _handle(_request(args.server, "POST", "/codebook/check", payload), args.out)

    if args.command == "aep":
        single = args.subcommand in ("theorem2", "theorem3", "lemma6", "fano")
        if args.subcommand == "lemma4":
            payload = {
                "spec_text": _read_channel(args.channel),
                "n_grid": args.n,
                "seed": args.seed,
                "trials": args.trials,
                "mc": args.mc,
            }
            if args.epsilon is not None:
                payload["epsilon"] = args.epsilon
        else:
            payload = _experiment_payload(args, single_rate=single)
        return _handle(
            _request(args.server, "POST", f"/experiments/{args.subcommand}", payload), args.out
        )

    if args.command == "relay":
        payload = _experiment_payload(args, single_rate=True)
        return _handle(_request(args.server, "POST", "/relay/compare", payload), args.out)

    if args.command == "sweep":
        payload = _experiment_payload(args, single_rate=False)
        return _handle(_request(args.server, "POST", "/sweep", payload), args.out)

    print("error: unknown command", file=sys.stderr)
    return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
