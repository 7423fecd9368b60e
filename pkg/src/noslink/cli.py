"""Thin-client CLI.

Every subcommand talks to the service API: against ``--server URL`` when
given, otherwise against an in-process instance of the same app.  Worker
count for sweeps is controlled by the ``NOSLINK_WORKERS`` environment
variable (it applies on whichever side runs the simulation).
"""

from __future__ import annotations

import argparse
import json
import sys
import time

from .sim import load_config
from .service.models import SimConfigModel


def _client(server: str | None):
    if server:
        import httpx
        return httpx.Client(base_url=server.rstrip("/"), timeout=None)
    from fastapi.testclient import TestClient
    from .service import create_app
    return TestClient(create_app())


def _config_model(args) -> SimConfigModel:
    overrides = {"snr_db": getattr(args, "snr_db", None),
                 "seed": getattr(args, "seed", None)}
    cfg = load_config(args.config, overrides)
    return SimConfigModel.from_config(cfg)


def _fail(resp) -> None:
    try:
        detail = resp.json().get("detail", resp.text)
    except ValueError:
        detail = resp.text
    sys.exit(f"error: server returned {resp.status_code}: {detail}")


def _wait_for_job(client, job_id: str, quiet: bool = False) -> dict:
    last = None
    while True:
        resp = client.get(f"/jobs/{job_id}")
        if resp.status_code != 200:
            _fail(resp)
        status = resp.json()
        if not quiet and status["progress"] != last:
            last = status["progress"]
            if last:
                print(f"  snr#{last.get('snr_index', 0)}: "
                      f"{last.get('packets', 0)} packets, "
                      f"{last.get('packet_errors', 0)} errors", file=sys.stderr)
        if status["status"] in ("done", "failed"):
            return status
        time.sleep(0.2)


def cmd_simulate(args) -> int:
    client = _client(args.server)
    model = _config_model(args)
    resp = client.post("/jobs/sweep", json={"config": model.model_dump()})
    if resp.status_code != 200:
        _fail(resp)
    status = _wait_for_job(client, resp.json()["job_id"], quiet=args.quiet)
    if status["status"] == "failed":
        sys.exit(f"error: sweep failed: {status['error']}")
    result = status["result"]
    print(f"{'snr_db':>8} {'packets':>9} {'errors':>7} {'PER':>12} "
          f"{'95% interval':>26} {'BER':>12}")
    for p in result["points"]:
        print(f"{p['snr_db']:>8.2f} {p['packets']:>9} {p['packet_errors']:>7} "
              f"{p['per']:>12.4e} [{p['per_lo']:>11.4e},{p['per_hi']:>11.4e}] "
              f"{p['ber']:>12.4e}")
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as f:
            f.write(result["csv"])
        print(f"wrote {args.out}", file=sys.stderr)
    return 0


def cmd_miss_rate(args) -> int:
    client = _client(args.server)
    model = _config_model(args)
    body = {"config": model.model_dump(),
            "iters": [int(v) for v in args.iters.split(",")],
            "packets": args.packets}
    resp = client.post("/jobs/miss-rate", json=body)
    if resp.status_code != 200:
        _fail(resp)
    status = _wait_for_job(client, resp.json()["job_id"], quiet=args.quiet)
    if status["status"] == "failed":
        sys.exit(f"error: miss-rate run failed: {status['error']}")
    result = status["result"]
    print(f"{'snr_db':>8} {'iter':>5} {'packets':>9} {'misses':>7} {'rate':>12}")
    for p in result["points"]:
        print(f"{p['snr_db']:>8.2f} {p['iter']:>5} {p['packets']:>9} "
              f"{p['misses']:>7} {p['miss_rate']:>12.4e}")
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as f:
            f.write(result["csv"])
    return 0


def cmd_analyze(args) -> int:
    client = _client(args.server)
    body = {"codebook": args.codebook, "channels": args.channels,
            "nt": args.nt, "nr": args.nr, "seed": args.seed}
    resp = client.post("/analyze-codebook", json=body)
    if resp.status_code != 200:
        _fail(resp)
    data = resp.json()
    print(f"codebook: V={data['v']} M={data['m']} D={data['d']}")

    def show(tag, corr):
        if corr is None:
            return
        for kind in ("inter", "intra"):
            h = corr[kind]
            if h is None:
                print(f"  {tag} {kind}: undefined (V < 2)")
            else:
                mx = "none" if h["max_db"] is None else f"{h['max_db']:.2f} dB"
                print(f"  {tag} {kind}: {h['count']} entries, max {mx}")
        if corr.get("mean_word_energy") is not None:
            print(f"  {tag} mean received energy: {corr['mean_word_energy']:.4f} "
                  f"(normaliser {corr['normalizer']:.4f})")

    show("pre-channel", data["pre"])
    show("post-channel", data.get("post"))
    if args.out:
        written = []
        for tag, corr in (("pre", data["pre"]), ("post", data.get("post"))):
            if corr is None:
                continue
            for kind in ("inter", "intra"):
                h = corr[kind]
                if h is None:
                    continue
                path = f"{args.out}_{tag}_{kind}.csv"
                with open(path, "w", encoding="utf-8", newline="") as f:
                    f.write("bin_low_db,bin_high_db,count\n")
                    for b in h["bins"]:
                        f.write(f"{b['bin_low_db']:.10g},"
                                f"{b['bin_high_db']:.10g},{b['count']}\n")
                written.append(path)
        print("wrote " + ", ".join(written), file=sys.stderr)
    return 0


def cmd_decode_one(args) -> int:
    client = _client(args.server)
    model = _config_model(args)
    body = {"config": model.model_dump(), "snr_db": args.snr_db,
            "packet_index": args.packet}
    resp = client.post("/decode-one", json=body)
    if resp.status_code != 200:
        _fail(resp)
    data = resp.json()
    if args.json:
        print(json.dumps(data, indent=2))
        return 0
    print(f"snr {data['snr_db']} dB, packet {args.packet}")
    print(f"  true indices:   {data['true_indices']}")
    for step in data["steps"]:
        layers = ",".join(str(l) for l in step["layers"])
        print(f"  step {step['step']:>2} [{step['kind']:>7}] layer(s) {layers:<8} "
              f"best {step['best_score']:+.6f} survivors {step['survivors']}")
    best = data["candidates"][0]
    print(f"  best candidate: {best['indices']} (score {best['score']:+.6f})")
    print(f"  crc_pass={data['crc_pass']} packet_error={data['packet_error']}")
    print(f"  metric evals: {data['stats']['metric_evals']}, "
          f"order evals: {data['stats']['order_evals']}")
    return 0


def cmd_validate(args) -> int:
    client = _client(args.server)
    resp = client.post("/validate-artifacts",
                       json={"codebook": args.codebook, "weights": args.weights})
    if resp.status_code != 200:
        _fail(resp)
    data = resp.json()
    for check in data["checks"]:
        mark = "ok " if check["ok"] else "FAIL"
        print(f"[{mark}] {check['name']}: {check['detail']}")
    return 0 if data["ok"] else 1


def cmd_serve(args) -> int:
    import uvicorn
    uvicorn.run("noslink.service.app:app", host=args.host, port=args.port)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="noslink",
        description="Link-level NOS/MIMO simulation toolkit (thin client)")
    parser.add_argument("--server", default=None,
                        help="service URL; omitted = run in-process")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run a PER/BER sweep")
    p.add_argument("--config", required=True)
    p.add_argument("--snr-db", dest="snr_db", default=None,
                   help="override SNR list: 'a,b,c' or 'start:stop:step'")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", default=None, help="CSV output path")
    p.add_argument("--quiet", action="store_true")
    p.set_defaults(fn=cmd_simulate)

    p = sub.add_parser("miss-rate", help="candidate miss rate vs iter")
    p.add_argument("--config", required=True)
    p.add_argument("--snr-db", dest="snr_db", default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--iters", required=True, help="comma-separated iter values")
    p.add_argument("--packets", type=int, default=2000)
    p.add_argument("--out", default=None)
    p.add_argument("--quiet", action="store_true")
    p.set_defaults(fn=cmd_miss_rate)

    p = sub.add_parser("analyze-codebook", help="correlation analysis")
    p.add_argument("--codebook", required=True)
    p.add_argument("--channels", type=int, default=0,
                   help="post-channel draws (0 = pre-channel only)")
    p.add_argument("--nt", type=int, default=None)
    p.add_argument("--nr", type=int, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None, help="CSV path prefix")
    p.set_defaults(fn=cmd_analyze)

    p = sub.add_parser("decode-one", help="trace one packet through the decoder")
    p.add_argument("--config", required=True)
    p.add_argument("--snr-db", dest="snr_db_value", type=float, required=True)
    p.add_argument("--packet", type=int, default=0)
    p.add_argument("--json", action="store_true")
    p.set_defaults(fn=cmd_decode_one)

    p = sub.add_parser("validate-artifacts", help="artifact invariant gate")
    p.add_argument("--codebook", default=None)
    p.add_argument("--weights", default=None)
    p.set_defaults(fn=cmd_validate)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.set_defaults(fn=cmd_serve)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "snr_db_value", None) is not None:
        args.snr_db = args.snr_db_value
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
