"""Line-oriented protocol loop: one JSON request per line on stdin,
one JSON response per line on stdout, in order, until EOF."""

from __future__ import annotations

import argparse
import json
import sys

from .executor import DEFAULT_TIMEOUT_S, execute


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="cadquery-runner",
        description="execute CAD scripts received as JSON lines on stdin",
    )
    parser.add_argument("--out-dir", default=".",
                        help="where scripts run and STL files land")
    parser.add_argument("--max-seconds", type=float, default=DEFAULT_TIMEOUT_S,
                        help="per-script budget when the request names none")
    args = parser.parse_args(argv)

    for line in sys.stdin:
        line = line.strip()
        if not line:
            continue
        try:
            request = json.loads(line)
        except json.JSONDecodeError:
            response = {"id": "", "ok": False,
                        "error": "runtime: unreadable request line"}
        else:
            if isinstance(request, dict):
                # the loop must survive anything a request does
                try:
                    response = execute(request, args.out_dir, args.max_seconds)
                except Exception as exc:
                    response = {"id": request.get("id", ""), "ok": False,
                                "error": f"runtime: internal runner error: {exc}"}
            else:
                response = {"id": "", "ok": False,
                            "error": "runtime: request must be a JSON object"}
        sys.stdout.write(json.dumps(response, sort_keys=True) + "\n")
        sys.stdout.flush()
    return 0


if __name__ == "__main__":
    sys.exit(main())
