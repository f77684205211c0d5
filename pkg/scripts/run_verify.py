"""Run the acceptance checks and print one line per criterion.

    python3 scripts/run_verify.py            # all thirteen
    python3 scripts/run_verify.py 2 9 13     # a subset
"""

import sys

from outwave import verify


def main(argv):
    selected = [int(a) for a in argv] or None
    results = verify.run(selected)
    failed = [r.number for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} passed" + (f"; failed: {failed}" if failed else ""))
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main(sys.argv[1:]))
