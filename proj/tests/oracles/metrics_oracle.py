#!/usr/bin/env python3
"""Independent evaluation of the readability and lexical metrics.

Usage: metrics_oracle.py PSYCH_CSV REFERENCE_JSON TEXT... [--check GOLDEN]

Prints the metrics TSV for the given texts (ids are file stems). With
--check, compares the output against GOLDEN byte for byte instead.
"""

import json
import math
import os
import re
import sys

STOPWORDS = set("""
a about above after again against all am an and any are as at be because been
before being below between both but by can could did do does doing down during
each few for from further had has have having he her here hers herself him
himself his how i if in into is it its itself just me might more most must my
myself no nor not now o of off on once only or other our ours ourselves out
over own same shall she should so some such than that the thee their theirs
them themselves then there these they thine this those thou thy through to too
under until up upon very was we were what when where which while who whom why
will with would ye you your yours yourself yourselves
""".split())

PRONOUNS = set("""
i me my mine myself you your yours yourself he him his himself she her hers
herself it its itself we us our ours ourselves they them their theirs
themselves thou thee thy thine ye
""".split())

VOWELS = set("aeiouy")
NOTE = "PCREFp/PCSYNp/PCNARp are proxy approximations, not Coh-Metrix components"
COLUMNS = ["FRE", "FKGL", "IMGc", "CNCc", "LDTTRa", "PCREFp", "PCSYNp", "PCNARp"]


def tokens(text):
    out = []
    # Runs of letters and apostrophes, apostrophes trimmed at both ends.
    for run in re.findall(r"[A-Za-z']+", text.replace("’", "'")):
        run = run.strip("'").lower()
        if run:
            out.append(run)
    return out


def hiatus(before, a, b, after):
    if a == "o" and b == "e" and after in ("t", "m"):
        return True
    if a == "i" and b in "ao" and before not in ("", "c", "g", "s", "t", "x"):
        return True
    if a == "u" and b in "ao" and before not in ("", "q", "g"):
        return True
    return False


def syllables(word):
    w = "".join(c for c in word.lower() if "a" <= c <= "z")
    count = 0
    for m in re.finditer(r"[aeiouy]+", w):
        count += 1
        for j in range(m.start() + 1, m.end()):
            before = w[j - 2] if j >= 2 else ""
            after = w[j + 1] if j + 1 < len(w) else ""
            if hiatus(before, w[j - 1], w[j], after):
                count += 1
    if len(w) >= 2 and w.endswith("e") and w[-2] not in VOWELS:
        consonant_le = w[-2] == "l" and len(w) >= 3 and w[-3] not in VOWELS
        if not consonant_le and count > 1:
            count -= 1
    return max(count, 1)


def sentences(text):
    parts = re.split(r"(?<=[.!?])(?=\s|$)", text)
    return [p.strip() for p in parts if tokens(p)]


def clamp(x, lo, hi):
    return min(max(x, lo), hi)


def load_psych(path):
    table = {}
    with open(path, encoding="utf-8") as f:
        for i, line in enumerate(f):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            word, img, cnc = line.split(",")
            if i == 0 and word.lower() == "word":
                continue
            table[word.lower()] = (int(img), int(cnc))
    return table


def percentile(raw, moments):
    z = (raw - moments["mean"]) / moments["sd"]
    return clamp(50.0 * math.erfc(-z / math.sqrt(2.0)), 0.0, 100.0)


def metrics(text, psych, ref):
    toks = tokens(text)
    sents = sentences(text)
    n_sent = max(len(sents), 1)
    syl = sum(syllables(t) for t in toks)
    wps = len(toks) / n_sent
    spw = syl / len(toks)
    fre = clamp(206.835 - 1.015 * wps - 84.6 * spw, 0.0, 100.0)
    fkgl = clamp(0.39 * wps + 11.8 * spw - 15.59, 0.0, 18.0)

    hits = [psych[t] for t in toks if t not in STOPWORDS and t in psych]
    img = sum(h[0] for h in hits) / len(hits) if hits else None
    cnc = sum(h[1] for h in hits) / len(hits) if hits else None
    ldttr = len(set(toks)) / len(toks)

    content = [set(t for t in tokens(s) if t not in STOPWORDS) for s in sents]
    ref_raw = 0.0
    if len(content) >= 2:
        total = 0.0
        for x, y in zip(content, content[1:]):
            union = len(x | y)
            total += len(x & y) / union if union else 0.0
        ref_raw = total / (len(content) - 1)
    syn_raw = -sum(len(tokens(s)) for s in sents) / len(sents) if sents else 0.0
    narrative = sum(
        1 for t in toks
        if t in PRONOUNS or (len(t) > 4 and t.endswith("ing")) or (len(t) > 3 and t.endswith("ed")))
    rare = sum(1 for t in toks if t not in STOPWORDS and syllables(t) >= 3)
    nar_raw = (narrative - rare) / len(toks)

    return [fre, fkgl, img, cnc, ldttr,
            percentile(ref_raw, ref["pcref"]),
            percentile(syn_raw, ref["pcsyn"]),
            percentile(nar_raw, ref["pcnar"])]


def fmt(v):
    return "NA" if v is None else "%.4f" % v


def main(argv):
    check = None
    if "--check" in argv:
        i = argv.index("--check")
        check = argv[i + 1]
        argv = argv[:i] + argv[i + 2:]
    psych = load_psych(argv[0])
    with open(argv[1], encoding="utf-8") as f:
        ref = json.load(f)
    rows = []
    for path in argv[2:]:
        with open(path, encoding="utf-8") as f:
            text = f.read()
        rows.append((os.path.splitext(os.path.basename(path))[0], metrics(text, psych, ref)))

    means = []
    for c in range(len(COLUMNS)):
        vals = [r[1][c] for r in rows if r[1][c] is not None]
        means.append(sum(vals) / len(vals) if vals else None)

    out = "# " + NOTE + "\n" + "id\t" + "\t".join(COLUMNS) + "\n"
    for rid, vals in rows + [("MEAN", means)]:
        out += rid + "\t" + "\t".join(fmt(v) for v in vals) + "\n"

    if check is None:
        sys.stdout.write(out)
        return 0
    with open(check, encoding="utf-8") as f:
        golden = f.read()
    if golden != out:
        sys.stderr.write("oracle output differs from golden file\n--- oracle\n" + out)
        return 1
    print("oracle matches golden")
    return 0


if __name__ == "__main__":
    sys.exit(main(sys.argv[1:]))
