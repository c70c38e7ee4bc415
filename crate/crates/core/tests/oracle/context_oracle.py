"""Reference values for the context packer and the BPE counter.

Reads tests/fixtures/context/materials.json and the builtin templates, packs
every material at a set of boundary budgets with its own implementation of
the packing rules, counts tokens with tiktoken, and writes
tests/fixtures/context/expected.json.

    python3 tests/oracle/context_oracle.py

tiktoken reads the cl100k vocabulary file shipped with the tiktoken-rs crate,
so no network access is needed.
"""

import glob
import json
import os
import sys

import tiktoken
from tiktoken.load import load_tiktoken_bpe

HERE = os.path.dirname(os.path.abspath(__file__))
CORE = os.path.dirname(os.path.dirname(HERE))
FIXTURES = os.path.join(CORE, "tests", "fixtures")

CL100K_SHA256 = "223921b76ee99bde995b7ff738513eef100fb51d18c93597a113bcffe865b2a7"
CL100K_PAT = (
    r"""'(?i:[sdmt]|ll|ve|re)|[^\r\n\p{L}\p{N}]?+\p{L}++|\p{N}{1,3}+| ?[^\s\p{L}\p{N}]++[\r\n]*+|\s++$|\s*[\r\n]|\s+(?!\S)|\s"""
)

HEADERS = {
    "FocalSig": "// Focal class",
    "FocalCtor": "// Focal class constructors",
    "FocalBody": "// Focal method",
    "Fields": "// Focal class fields",
    "GetterSetters": "// Focal class getters and setters",
    "Namespace": "// Package and imports of the focal class",
    "DepSig": "// Dependent class",
    "DepCtor": "// Dependent class constructors",
    "InvokedSigs": "// Invoked methods",
    "AllFocalMethodSigs": "// All methods of the focal class",
}


def encoding():
    found = glob.glob(
        os.path.expanduser("~/.cargo/registry/src/*/tiktoken-rs-*/assets/cl100k_base.tiktoken")
    ) + glob.glob(
        os.path.join(os.environ.get("CARGO_HOME", "/opt/cargo"), "registry/src/*/tiktoken-rs-*/assets/cl100k_base.tiktoken")
    )
    if not found:
        sys.exit("cl100k_base.tiktoken not found in the cargo registry")
    ranks = load_tiktoken_bpe(sorted(found)[-1], expected_hash=CL100K_SHA256)
    special = {"<|endoftext|>": 100257, "<|fim_prefix|>": 100258, "<|fim_middle|>": 100259,
               "<|fim_suffix|>": 100260, "<|endofprompt|>": 100276}
    return tiktoken.Encoding("cl100k_base", pat_str=CL100K_PAT, mergeable_ranks=ranks, special_tokens=special)


ENC = encoding()


def count(text):
    return len(ENC.encode_ordinary(text))


def load_template(name):
    system, user, current = None, None, None
    with open(os.path.join(CORE, "templates", name), encoding="utf-8") as f:
        for line in f.read().splitlines():
            if line.rstrip() == "[system]":
                system, current = [], "system"
            elif line.rstrip() == "[user]":
                user, current = [], "user"
            elif current == "system":
                system.append(line)
            elif current == "user":
                user.append(line)
    join = lambda lines: "\n".join(lines).rstrip("\n") if lines is not None else ""
    return join(system), join(user)


BASE = load_template("base.txt")
DEP = load_template("dep.txt")


def prompt(template, blocks):
    system, user = template
    context = "\n".join(HEADERS[k] + "\n" + t for k, t in blocks)
    user = user.replace("{{context}}", context).replace("{{error}}", "").replace("{{previous_test}}", "")
    return "\n".join([system, user] if system else [user])


def tokens(template, blocks):
    return count(prompt(template, blocks))


def nonempty(kind, text):
    return [(kind, text)] if text else []


def pack(m, limit, use_fields, probes=None):
    """Returns (outcome, template, kinds, tokens); records stage counts in `probes`."""
    note = probes.append if probes is not None else (lambda _: None)
    ctx = [("FocalSig", m["class_signature"]), ("FocalCtor", m["constructors"]), ("FocalBody", m["body"])]
    if use_fields:
        ctx += nonempty("Fields", m["fields"]) + nonempty("GetterSetters", m["getter_setters"])

    def done(blocks, template, name, path):
        t = tokens(template, blocks)
        note(t)
        if t >= limit:
            return ("Abort", None, None, t)
        return (path, name, [k for k, _ in blocks], t)

    t = tokens(BASE, ctx)
    note(t)
    if t >= limit:
        return ("Abort", None, None, t)
    if m["namespace"]:
        trial = ctx + [("Namespace", m["namespace"])]
        t = tokens(BASE, trial)
        note(t)
        if t >= limit:
            return done(ctx, BASE, "Base", "NamespaceShortCircuit")
        ctx = trial
    if m["dependencies"]:
        extra = []
        for sig, ctors, invoked in m["dependencies"]:
            extra += nonempty("DepSig", sig) + nonempty("DepCtor", ctors) + nonempty("InvokedSigs", invoked)
        full = tokens(DEP, ctx + extra)
        bare = tokens(DEP, ctx)
        note(full)
        note(bare)
        if full < limit:
            return done(ctx + extra, DEP, "Dep", "DepIncluded")
        if bare < limit:
            return done(ctx, DEP, "Dep", "DepOmitted")
        return done(ctx, BASE, "Base", "DepOmittedBaseFallback")
    path = "NoDepInvokedRejected"
    trial = ctx + nonempty("InvokedSigs", m["invoked"])
    t = tokens(BASE, trial)
    note(t)
    if t < limit:
        ctx, path = trial, "NoDepInvokedOnly"
        trial = ctx + nonempty("AllFocalMethodSigs", m["all_method_signatures"])
        t = tokens(BASE, trial)
        note(t)
        if t < limit:
            ctx, path = trial, "NoDepAll"
    return done(ctx, BASE, "Base", path)


def main():
    with open(os.path.join(FIXTURES, "context", "materials.json"), encoding="utf-8") as f:
        materials = json.load(f)
    cases = []
    for entry in materials:
        for use_fields in (False, True):
            probes = []
            pack(entry["material"], 10**9, use_fields, probes)
            budgets = {2700, 10**6}
            for t in probes:
                budgets.update({t, t + 1})
            for limit in sorted(budgets):
                path, template, kinds, t = pack(entry["material"], limit, use_fields)
                cases.append({
                    "name": entry["name"],
                    "limit": limit,
                    "use_fields": use_fields,
                    "path": path,
                    "template": template,
                    "kinds": kinds,
                    "tokens": t,
                })

    samples = []
    for root, _, files in sorted(os.walk(os.path.join(FIXTURES, "calc"))):
        for name in sorted(files):
            with open(os.path.join(root, name), encoding="utf-8") as f:
                samples.append(f.read())
    samples += [
        "",
        "public int add(int a, int b) {\n    return a + b;\n}",
        "    \n\t\t  \n",
        "naïve café 東京 emoji \U0001f600 done",
        "assertEquals(0.1 + 0.2, 0.30000000000000004, 1e-12);",
        "<|endoftext|> is just text here",
    ]
    bpe = [{"text": s, "count": count(s)} for s in samples]

    out = {"cases": cases, "bpe": bpe}
    with open(os.path.join(FIXTURES, "context", "expected.json"), "w", encoding="utf-8") as f:
        json.dump(out, f, indent=1, ensure_ascii=False)
        f.write("\n")
    print(f"{len(cases)} packing cases, {len(bpe)} token counts")


if __name__ == "__main__":
    main()
