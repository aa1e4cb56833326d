"""Score a rollout-group JSONL file against a running reward service.

Each input line is one group:
    {"prompt_id": ..., "prompt": ..., "tests": [...],
     "rollouts": [{"completion": ..., "tokens": [...],
                   "logp_theta": [...], "logp_old": [...],
                   "logp_ref": [...]}, ...]}

The script fills a "reward" field on every rollout (rollouts the service
could not score get reward 0.0 and an "error" field) and writes the result
as JSONL, ready for `thinkanywhere grpo-audit`.

Usage:
    python3 score_rollouts.py in.jsonl out.jsonl --base-url http://127.0.0.1:8700
"""

import argparse
import json

from trainer_client import ClientConfig, ItemError, RewardClient


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("input")
    ap.add_argument("output")
    ap.add_argument("--base-url", default="http://127.0.0.1:8700")
    ap.add_argument("--timeout", type=float, default=30.0)
    ap.add_argument("--retries", type=int, default=2)
    args = ap.parse_args()

    cfg = ClientConfig(base_url=args.base_url, timeout=args.timeout,
                       retries=args.retries)
    with RewardClient(cfg) as client, open(args.input) as fin, \
            open(args.output, "w") as fout:
        for line in fin:
            group = json.loads(line)
            pairs = [(group.get("prompt", ""), r["completion"])
                     for r in group["rollouts"]]
            totals = client.score_group(pairs, group.get("tests", []))
            for rollout, total in zip(group["rollouts"], totals):
                if isinstance(total, ItemError):
                    rollout["reward"] = 0.0
                    rollout["error"] = total.message
                else:
                    rollout["reward"] = total
            fout.write(json.dumps(group) + "\n")


if __name__ == "__main__":
    main()
