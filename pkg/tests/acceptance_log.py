"""Collects one PASS/FAIL line per acceptance criterion for the terminal summary."""

RESULTS: dict[str, str] = {}


def record(key: str, ok: bool, detail: str) -> str:
    line = f"ACCEPTANCE {key}: {'PASS' if ok else 'FAIL'} | {detail}"
    RESULTS[key] = line
    print(line)
    return line
