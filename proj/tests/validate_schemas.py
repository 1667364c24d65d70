"""Validates shipped configs and manifest outputs against the JSON schemas."""
import json
import pathlib
import sys

import jsonschema

root = pathlib.Path(sys.argv[1])
schemas = {p.name: json.loads(p.read_text()) for p in (root / "schemas").glob("*.schema.json")}

configs = root / "data" / "configs"
pairs = [
    (configs / "laminate_2d.json", "sequence"),
    (configs / "boundary_concentration_2d.json", "sequence"),
    (configs / "cofactor_boundary_3d.json", "sequence"),
    (configs / "det_functional.json", "functional"),
    (configs / "power_norm_functional.json", "functional"),
    (configs / "boundary_points_2d.json", "points"),
    (configs / "profiles_2d.json", "profiles"),
    (configs / "dictionary_2d.json", "dictionary"),
]
by_command = {
    "relax": "relaxation-result",
    "qcb": "relaxation-result",
    "generate": "field",
    "estimate": "dpm",
    "check": "check-report",
    "wlsc": "wlsc-verdict",
}
for m in sorted((root / "data" / "manifests").rglob("*.manifest.json")):
    pairs.append((m, "manifest"))
    man = json.loads(m.read_text())
    primary = m.parent / man["outputs"][0]["path"]
    if man["command"] == "cof-check":
        pairs.append((m.parent / man["outputs"][1]["path"], "cof-report"))
    else:
        pairs.append((primary, by_command[man["command"]]))

failed = 0
for path, name in pairs:
    schema = schemas[name + ".schema.json"]
    try:
        jsonschema.validate(json.loads(path.read_text()), schema, cls=jsonschema.Draft202012Validator)
        print(f"ok   {path.relative_to(root)} ({name})")
    except jsonschema.ValidationError as e:
        failed += 1
        print(f"FAIL {path.relative_to(root)} ({name}): {e.message} at {list(e.absolute_path)}")
sys.exit(1 if failed else 0)
