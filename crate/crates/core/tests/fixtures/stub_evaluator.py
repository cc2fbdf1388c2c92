#!/usr/bin/env python3
"""Additive-game evaluator speaking the line-JSON protocol, with fault modes.

usage: stub_evaluator.py [--mode MODE] [--after K] [--base B] W0 W1 ...

modes:
  ok            answer every request (default)
  out_of_range  answer request K with metric 1.5
  wrong_id      answer request K with id + 1
  hang          stop answering at request K
  die           exit with status 7 at request K
  no_init       never answer the handshake

--die-once FILE makes the process exit with status 7 at request K only
while FILE exists (the file is removed first), so the same command line
fails once and then succeeds.
"""
import argparse
import json
import os
import sys
import time


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--mode", default="ok")
    ap.add_argument("--after", type=int, default=0)
    ap.add_argument("--base", type=float, default=0.5)
    ap.add_argument("--die-once")
    ap.add_argument("weights", type=float, nargs="+")
    args = ap.parse_args()

    served = 0
    for line in sys.stdin:
        if not line.strip():
            continue
        req = json.loads(line)
        kind = req["type"]
        if kind == "init":
            if args.mode == "no_init":
                time.sleep(3600)
            reply = {"type": "init_ok", "players": len(args.weights), "metric_min": 0.0, "metric_max": 1.0}
        elif kind == "eval":
            faulty = args.mode != "ok" and served >= args.after
            served += 1
            if faulty and args.mode == "hang":
                time.sleep(3600)
            if args.die_once and served > args.after and os.path.exists(args.die_once):
                os.remove(args.die_once)
                print("dying once on purpose", file=sys.stderr)
                sys.exit(7)
            if faulty and args.mode == "die":
                print("dying on purpose", file=sys.stderr)
                sys.exit(7)
            metric = args.base
            for bit, w in zip(req["mask"], args.weights):
                if bit:
                    metric += w
            metric = min(1.0, max(0.0, metric))
            reply = {"type": "eval_ok", "id": req["id"], "metric": metric}
            if faulty and args.mode == "out_of_range":
                reply["metric"] = 1.5
            if faulty and args.mode == "wrong_id":
                reply["id"] = req["id"] + 1
        elif kind == "close":
            return 0
        else:
            print(f"unknown request {kind!r}", file=sys.stderr)
            return 1
        sys.stdout.write(json.dumps(reply) + "\n")
        sys.stdout.flush()
    return 0


if __name__ == "__main__":
    sys.exit(main())
