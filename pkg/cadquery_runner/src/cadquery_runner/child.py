"""Child-side script harness: execute, pick up the result, export STL.

Runs as a plain script (never imported by the parent) so a hard crash
here cannot take the runner loop down.  Exit codes the parent maps to
error categories: 0 success, 3 runtime failure, 4 export failure.
A CPU rlimit slightly above the wall budget backstops busy loops even
if the parent misses its deadline.
"""

import ast
import resource
import sys
import traceback

RUNTIME_EXIT = 3
EXPORT_EXIT = 4


def _load(script_path: str):
    with open(script_path, "r", encoding="utf-8") as fh:
        source = fh.read()
    tree = ast.parse(source)
    # a trailing bare expression becomes the fallback result binding
    if tree.body and isinstance(tree.body[-1], ast.Expr):
        grab = ast.Assign(
            targets=[ast.Name(id="__last_value__", ctx=ast.Store())],
            value=tree.body[-1].value,
        )
        tree.body[-1] = ast.copy_location(grab, tree.body[-1])
        ast.fix_missing_locations(tree)
    return compile(tree, "<script>", "exec")


def _export(result, stl_path: str):
    if isinstance(result, (bytes, bytearray)):
        with open(stl_path, "wb") as fh:
            fh.write(bytes(result))
        return
    try:
        from cadquery import exporters
    except ImportError:
        raise RuntimeError(
            "result is not raw STL bytes and cadquery is not installed"
        ) from None
    exporters.export(result, stl_path)


def main() -> int:
    script_path, stl_path, budget = sys.argv[1], sys.argv[2], float(sys.argv[3])
    limit = max(1, int(budget) + 1)
    resource.setrlimit(resource.RLIMIT_CPU, (limit, limit + 1))

    namespace = {"__name__": "__main__"}
    try:
        exec(_load(script_path), namespace)
    except BaseException:
        traceback.print_exc()
        return RUNTIME_EXIT

    result = namespace.get("result")
    if result is None:
        result = namespace.get("__last_value__")
    if result is None:
        print("script must bind its solid to a variable named 'result' "
              "(or end with a bare expression)", file=sys.stderr)
        return RUNTIME_EXIT

    try:
        _export(result, stl_path)
    except BaseException:
        traceback.print_exc()
        return EXPORT_EXIT
    return 0


if __name__ == "__main__":
    sys.exit(main())
