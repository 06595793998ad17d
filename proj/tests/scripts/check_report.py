"""Validates a run directory: report.json against the JSON schema, every SVG
as well-formed XML, and every manifest checksum."""

import hashlib
import json
import pathlib
import sys
import xml.etree.ElementTree as ET

import jsonschema


def main(run_dir: str, schema_path: str) -> int:
    run = pathlib.Path(run_dir)
    report = json.loads((run / "report.json").read_text())
    schema = json.loads(pathlib.Path(schema_path).read_text())
    jsonschema.validate(report, schema)

    svgs = sorted(run.glob("*.svg"))
    if not svgs:
        print("no SVG files found")
        return 1
    for svg in svgs:
        root = ET.parse(svg).getroot()
        if not root.tag.endswith("svg"):
            print(f"{svg.name}: root element is {root.tag}")
            return 1

    manifest = json.loads((run / "manifest.json").read_text())
    for art in manifest["artifacts"]:
        digest = hashlib.sha256((run / art["path"]).read_bytes()).hexdigest()
        if digest != art["sha256"]:
            print(f"{art['path']}: checksum mismatch")
            return 1
    print(f"report valid, {len(svgs)} SVGs parsed, {len(manifest['artifacts'])} checksums verified")
    return 0


if __name__ == "__main__":
    sys.exit(main(sys.argv[1], sys.argv[2]))
