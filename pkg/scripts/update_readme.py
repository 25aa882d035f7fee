#!/usr/bin/env python3
"""Replace the ```sh + ```text blocks in README.md with live `data info` output."""
import contextlib
import io
import pathlib
import re
import sys

ROOT = pathlib.Path(__file__).resolve().parent.parent

from rrcbench.cli import main as rrcbench_main

# Single source of truth for the example command shown in README.
EXAMPLE_SOURCES = [
    "data-sample/iris.arff", "data-sample/wine.arff", "data-sample/wdbc.arff", "synthetic:ring2D", "synthetic:spirals",
]


def main() -> None:
    sources = [s if s.startswith("synthetic:") else str(ROOT / s) for s in EXAMPLE_SOURCES]
    buf = io.StringIO()
    with contextlib.redirect_stdout(buf):
        status = rrcbench_main(["data", "info", *sources])
    if status != 0:
        print("update_readme.py: `data info` failed; README.md left untouched", file=sys.stderr)
        sys.exit(1)

    cmd = f"uv run rrcbench data info {' '.join(EXAMPLE_SOURCES)}"
    table = "\n".join(line.rstrip() for line in buf.getvalue().strip("\n").splitlines())
    new_blocks = f"```sh\n{cmd}\n```\n\n```text\n{table}\n```"

    readme_path = ROOT / "README.md"
    readme = readme_path.read_text()
    updated, n = re.subn(
        r"```sh\nuv run rrcbench data info[^\n]*\n```\n\n```text\n.*?```",
        lambda _: new_blocks,
        readme,
        flags=re.DOTALL,
    )
    if n == 0:
        print("update_readme.py: marker blocks not found in README.md, nothing updated", file=sys.stderr)
        sys.exit(1)
    readme_path.write_text(updated)
    print(f"update_readme.py: README.md updated ({n} block(s) replaced).")


if __name__ == "__main__":
    main()
