#!/usr/bin/env python3
"""Validates live /api responses against docs/api/*.schema.json.

    api_schema_test.py ATLAS SCHEMA_DIR PIPELINE_SCRIPT WORKDIR
"""
import json
import pathlib
import re
import signal
import subprocess
import sys
import time
import urllib.error
import urllib.parse
import urllib.request

import jsonschema
from referencing import Registry, Resource

atlas, schema_dir, pipeline, work = sys.argv[1:5]
atlas = str(pathlib.Path(atlas).resolve())
schema_dir = pathlib.Path(schema_dir)
work = pathlib.Path(work)

resources = {}
for path in sorted(schema_dir.glob("*.schema.json")):
    doc = json.loads(path.read_text())
    jsonschema.Draft202012Validator.check_schema(doc)
    resources[path.name] = Resource.from_contents(doc)
registry = Registry().with_resources(resources.items())
validators = {
    name.removesuffix(".schema.json"): jsonschema.Draft202012Validator(res.contents, registry=registry)
    for name, res in resources.items()
}

failures = []
checked = 0


def check(kind, url, body):
    global checked
    checked += 1
    errors = list(validators[kind].iter_errors(body))
    for e in errors[:3]:
        failures.append(f"{url}: {kind}: {'/'.join(map(str, e.absolute_path))}: {e.message[:200]}")


subprocess.run([pipeline, atlas, str(work)], check=True, stdout=subprocess.DEVNULL)
site = work / "site"
log = open(site / "schema-serve.log", "w+")
server = subprocess.Popen([atlas, "serve", "--port", "0"], cwd=site, stdout=log, stderr=subprocess.STDOUT)
try:
    port = None
    for _ in range(100):
        log.seek(0)
        m = re.search(r"listening on http://[^:]+:(\d+)", log.read())
        if m:
            port = int(m.group(1))
            break
        time.sleep(0.05)
    if port is None:
        sys.exit("server did not start")
    base = f"http://127.0.0.1:{port}"

    def get(endpoint, params):
        url = f"{base}{endpoint}?{urllib.parse.urlencode(params)}" if params else base + endpoint
        try:
            with urllib.request.urlopen(url, timeout=30) as r:
                return url, r.status, r.read()
        except urllib.error.HTTPError as e:
            return url, e.code, e.read()

    def ok(kind, endpoint, **params):
        url, status, raw = get(endpoint, params)
        if status != 200:
            failures.append(f"{url}: status {status}: {raw[:200]!r}")
            return None
        body = json.loads(raw)
        check(kind, url, body)
        return body

    def fails(status_wanted, code_wanted, endpoint, **params):
        url, status, raw = get(endpoint, params)
        body = json.loads(raw)
        check("error", url, body)
        if status != status_wanted or body.get("code") != code_wanted:
            failures.append(f"{url}: wanted {status_wanted} {code_wanted}, got {status} {body.get('code')}")

    catalog = ok("countries", "/api/countries")
    entries = catalog["countries"] + [catalog["region"]]
    for entry in entries:
        code = entry["code"]
        legend = ok("legend", "/api/legend", warehouse=code)
        ok("legend", "/api/legend", warehouse=code, scale=10000)
        if not legend or not entry["extent"]:
            continue
        bbox = ",".join(map(str, entry["extent"]))
        for group in legend["groups"]:
            for layer in group["layers"]:
                ok("features", "/api/features", warehouse=code, layer=layer["name"], bbox=bbox,
                   bbox_crs="geographic")
        w, s, e, n = entry["extent"]
        ok("identify", "/api/identify", warehouse=code, lon=(w + e) / 2, lat=(s + n) / 2)

    tv = next(c for c in entries if c["code"] == "TV")
    villages = ok("features", "/api/features", warehouse="TV", layer="villages",
                  bbox=",".join(map(str, tv["extent"])), bbox_crs="geographic")
    if villages and villages["features"]:
        lon, lat = villages["features"][0]["geometry"]["coordinates"]
        hit = ok("identify", "/api/identify", warehouse="TV", lon=lon, lat=lat, tolerance_px=3, scale=50000)
        if hit and not hit["results"]:
            failures.append("identify on a village returned nothing")
    ok("identify", "/api/identify", warehouse="FJ", lon=-179.5, lat=-16.0, layers="coastline")

    for q in ["fiji", "islands", "climate", "TV", "zzz-nothing"]:
        ok("search", "/api/search", q=q)

    ok("measure", "/api/measure", path="178,-18;179,-18;-179,-17")
    ok("measure", "/api/measure", path="178,-18;179,-18;179,-17", mode="area")

    fails(404, "not_found", "/api/nope")
    fails(404, "not_found", "/api/legend", warehouse="XX")
    fails(400, "invalid_argument", "/api/features", warehouse="FJ")
    fails(400, "invalid_argument", "/api/map", warehouse="FJ", bbox="1,2,3", width=256, height=256)
    fails(400, "invalid_argument", "/api/map", warehouse="FJ", bbox="176,-20,182,-15", bbox_crs="geographic",
          width=1, height=256)
    fails(400, "invalid_argument", "/api/measure", path="1,2;3")
    fails(400, "invalid_argument", "/api/search")
    fails(400, "out_of_zone", "/api/features", warehouse="TV", layer="villages", bbox="60,-10,100,-5",
          bbox_crs="geographic")
    fails(404, "not_found", "/api/features", warehouse="FJ", layer="no_such_layer", bbox="176,-20,182,-15",
          bbox_crs="geographic")
finally:
    server.send_signal(signal.SIGTERM)
    rc = server.wait(timeout=30)
    if rc != 0:
        failures.append(f"server exited with {rc}")

for f in failures:
    print("FAIL", f)
print(f"{checked} responses validated, {len(failures)} failures")
sys.exit(1 if failures else 0)
