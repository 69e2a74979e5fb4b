"""Regenerates the committed fixtures. Deterministic; run from any directory."""
import json
import math
import os
import random
import shutil

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
WD = "http://www.wikidata.org/entity/"
WDT = "http://www.wikidata.org/prop/direct/"

THINGS = [
    "horse", "dragon", "saint george", "princess", "curtain", "sword", "woman", "man", "sky", "tree",
    "castle", "dog", "lion", "angel", "halo", "cross", "book", "table", "chair", "cloud",
    "mountain", "river", "boat", "ship", "child", "crowd", "crown", "armor", "hat", "dress",
    "column", "arch", "landscape", "portrait", "still life", "fruit", "vase", "candle", "mirror", "shield",
    "lance", "knight", "soldier", "king", "queen", "bird", "sheep", "flower", "sea", "forest",
]
CREATORS = [f"Painter {i}" for i in range(30)]
COLLECTIONS = ["Louvre", "Orsay", "Lyon fine arts", "Lille fine arts", "Rouen fine arts", "Nantes fine arts",
               "Dijon fine arts", "Bordeaux fine arts", "Rennes fine arts", "Grenoble museum"]
MOVEMENTS = ["Baroque", "Romanticism", "Impressionism", "Realism", "Mannerism", "Neoclassicism"]

REL = {
    "P180": "depicts",
    "P170": "creator",
    "P195": "collection",
    "P135": "movement",
    "P800": "notable work",
    "P276": "location",
    "P347": "Joconde work ID",
    "P973": "described at URL",
    "P31": "instance of",
    "P737": "influenced by",
}


def write(path, text):
    os.makedirs(os.path.dirname(path), exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(text)


def csv_row(*fields):
    out = []
    for f in fields:
        if any(c in f for c in ',"\n'):
            f = '"' + f.replace('"', '""') + '"'
        out.append(f)
    return ",".join(out) + "\n"


def mini():
    rng = random.Random(7)
    base = os.path.join(ROOT, "mini")
    shutil.rmtree(base, ignore_errors=True)
    paintings = [f"Q{1000 + i}" for i in range(200)]
    things = [f"Q{3000 + i}" for i in range(len(THINGS))]
    creators = [f"Q{2000 + i}" for i in range(len(CREATORS))]
    collections = [f"Q{4000 + i}" for i in range(len(COLLECTIONS))]
    movements = [f"Q{5000 + i}" for i in range(len(MOVEMENTS))]
    rows = []
    depicts = {}
    for p in paintings:
        k = rng.choice([1, 2, 2, 3])
        depicts[p] = rng.sample(things, k)
        for t in depicts[p]:
            rows.append((WD + p, WDT + "P180", WD + t))
    creator = {p: rng.choice(creators) for p in paintings}
    for p in paintings:
        rows.append((WD + p, WDT + "P170", WD + creator[p]))
    collection = {p: rng.choice(collections) for p in paintings}
    for p in paintings:
        rows.append((WD + p, WDT + "P195", WD + collection[p]))
    for p in rng.sample(paintings, 80):
        rows.append((WD + p, WDT + "P135", WD + rng.choice(movements)))
    # inverse of creator for a subset
    for p in rng.sample(paintings, 40):
        rows.append((WD + creator[p], WDT + "P800", WD + p))
    # near-duplicate of collection for a subset
    for p in rng.sample(paintings, 30):
        rows.append((WD + p, WDT + "P276", WD + collection[p]))
    for i, p in enumerate(rng.sample(paintings, 40)):
        rows.append((WD + p, WDT + "P347", f"000PE{10000 + i}"))
    for i, p in enumerate(rng.sample(paintings, 20)):
        rows.append((WD + p, WDT + "P973", f"https://pop.culture.gouv.fr/notice/joconde/000PE{10000 + i}"))
    rows.append((WD + paintings[0], WDT + "P31", WD + "Q3305213"))
    for a, b in [(rng.choice(creators), rng.choice(creators)) for _ in range(15)]:
        if a != b:
            rows.append((WD + a, WDT + "P737", WD + b))
    # a few repeated records, collapsed on ingest
    rows.extend(rng.sample(rows, 6))
    rng.shuffle(rows)
    text = "from,rel,to\n" + "".join(csv_row(*r) for r in rows)
    write(os.path.join(base, "triples.csv"), text)

    labels = []
    for p in paintings:
        labels.append((WD + p, f"Painting {p[1:]}"))
    for q, name in zip(things, THINGS):
        labels.append((WD + q, name))
    for q, name in zip(creators, CREATORS):
        labels.append((WD + q, name))
    for q, name in zip(collections, COLLECTIONS):
        labels.append((WD + q, name))
    for q, name in zip(movements, MOVEMENTS):
        labels.append((WD + q, name))
    labels.append((WD + "Q3305213", "painting"))
    write(os.path.join(base, "text_data", "entity2text.txt"), "".join(f"{k}\t{v}\n" for k, v in labels))
    write(os.path.join(base, "text_data", "rel2text.txt"), "".join(f"{WDT}{k}\t{v}\n" for k, v in REL.items()))
    desc = []
    for p in paintings[:150]:
        names = [THINGS[int(t[1:]) - 3000] for t in depicts[p]]
        desc.append((WD + p, "An oil painting showing " + " and ".join(names) + "."))
    write(os.path.join(base, "text_data", "entity2description_en.csv"),
          "".join(csv_row(k, v) for k, v in desc))
    img = os.path.join(base, "images")
    os.makedirs(img, exist_ok=True)
    for p in paintings[100:130]:
        name = "".join(c for c in WD + p if c.isalnum()) + ".jpg"
        with open(os.path.join(img, name), "wb") as f:
            f.write(b"\xff\xd8\xff\xe0" + p.encode() + b"\xff\xd9")


# ---------------------------------------------------------------- extension

EXT_SUBJECTS = {
    "Q900": ("Saint George and the Dragon", True, True, ["Q950", "Q951", "Q952"]),
    "Q901": ("Still life with curtain", True, True, ["Q953", "Q954"]),
    "Q902": ("Portrait of a woman", True, False, ["Q955", "Q956"]),
    "Q903": ("Coastal landscape", False, True, ["Q957", "Q958"]),
    "Q904": ("Hunting scene", True, True, ["Q959", "Q950"]),
}
EXT_OBJECTS = {
    "Q950": "Saint George", "Q951": "dragon", "Q952": "princess", "Q953": "curtain", "Q954": "bowl",
    "Q955": "woman", "Q956": "pearl", "Q957": "sea", "Q958": "boat", "Q959": "forest",
}
EXT_DESC = {
    "Q900": "Saint George on a white horse drives his lance into the dragon while the princess looks on.",
    "Q901": "A heavy curtain is drawn back over a table with a vase and a bowl.",
    "Q902": "Half-length portrait of a woman wearing a pearl necklace.",
    "Q904": "Riders and their dogs chase a stag through the forest.",
}
VOCAB = [
    ["saint", "st"], ["george"], ["dragon"], ["princess"], ["horse"], ["lance"], ["jousting"], ["curtain", "curtains"],
    ["vase"], ["table"], ["cloth"], ["apple"], ["bowl"], ["woman"], ["pearl"], ["necklace"], ["sea"], ["boat"],
    ["forest"], ["dog", "dogs"], ["stag"], ["rider", "riders"], ["armour"], ["sky"], ["tree"],
]

REL_DEPICTS = WDT + "P180"


def record(kind, subject, text, candidate=None, attempt=1):
    r = {"kind": kind, "subject": WD + subject, "relation": REL_DEPICTS}
    if candidate is not None:
        r["candidate"] = candidate
    if attempt != 1:
        r["attempt"] = attempt
    r["text"] = text
    return json.dumps(r, ensure_ascii=False) + "\n"


def extend():
    base = os.path.join(ROOT, "extend")
    shutil.rmtree(base, ignore_errors=True)
    rows = []
    for s, (_, _, _, objs) in EXT_SUBJECTS.items():
        for o in objs:
            rows.append((WD + s, REL_DEPICTS, WD + o))
    rows.append((WD + "Q900", WDT + "P170", WD + "Q990"))
    rows.append((WD + "Q901", WDT + "P170", WD + "Q990"))
    write(os.path.join(base, "triples.csv"), "from,rel,to\n" + "".join(csv_row(*r) for r in rows))
    labels = [(WD + s, v[0]) for s, v in EXT_SUBJECTS.items()]
    labels += [(WD + q, v) for q, v in EXT_OBJECTS.items()]
    labels.append((WD + "Q990", "Paolo Uccello"))
    write(os.path.join(base, "text_data", "entity2text.txt"), "".join(f"{k}\t{v}\n" for k, v in labels))
    write(os.path.join(base, "text_data", "rel2text.txt"),
          f"{REL_DEPICTS}\tdepicts\n{WDT}P170\tcreator\n")
    write(os.path.join(base, "text_data", "entity2description_en.csv"),
          "".join(csv_row(WD + k, v) for k, v in EXT_DESC.items()))
    img = os.path.join(base, "images")
    os.makedirs(img, exist_ok=True)
    for s, (_, _, has_img, _) in EXT_SUBJECTS.items():
        if has_img:
            name = "".join(c for c in WD + s if c.isalnum()) + ".jpg"
            with open(os.path.join(img, name), "wb") as f:
                f.write(b"\xff\xd8\xff\xe0" + s.encode() + b"\xff\xd9")

    # word vectors: one direction per synonym group, small deterministic noise
    rng = random.Random(11)
    dim = 32
    lines = []
    for g, words in enumerate(VOCAB):
        basis = [0.0] * dim
        basis[g] = 1.0
        for w in words:
            v = [b + rng.uniform(-0.05, 0.05) for b in basis]
            lines.append(w + " " + " ".join(f"{x:.6f}" for x in v))
    write(os.path.join(base, "vectors.txt"), f"{len(lines)} {dim}\n" + "\n".join(lines) + "\n")

    text = "".join([
        record("text", "Q900", '["St. George", "horse", "lance", "princess"]'),
        record("text", "Q901", "Sure! Here you go: curtains, vase, table"),
        record("text", "Q901", '```json\n["Curtains", "vase", "table"]\n```', attempt=2),
        record("text", "Q902", '["necklace", "woman"]'),
        record("text", "Q904", '["dogs", "stag", "riders"]'),
    ])
    vision = "".join([
        record("vision", "Q900", '["horse", "jousting", "dragon"]'),
        record("vision", "Q901", '["apple", "table cloth"]'),
        record("vision", "Q903", "I cannot tell from this picture."),
        record("vision", "Q903", "Still unsure.", attempt=2),
        record("vision", "Q904", "[]"),
    ])
    qa = "".join([
        record("vision-qa", "Q900", "Yes.", "horse"),
        record("vision-qa", "Q900", "No, there is none.", "lance"),
        record("vision-qa", "Q901", "yes", "vase"),
        record("vision-qa", "Q901", "Yes, on the left.", "table"),
        record("vision-qa", "Q904", "yes", "dogs"),
        record("vision-qa", "Q904", "Maybe", "stag"),
        record("vision-qa", "Q904", "Possibly", "stag", attempt=2),
        record("vision-qa", "Q904", "no", "riders"),
    ])
    write(os.path.join(base, "replay", "10-text.jsonl"), text)
    write(os.path.join(base, "replay", "20-vision.jsonl"), vision)
    write(os.path.join(base, "replay", "30-vision-qa.jsonl"), qa)

    # ground-truth recovery: yes/no about existing objects
    rec = []
    for s, (_, has_desc, has_img, objs) in EXT_SUBJECTS.items():
        for o in objs:
            name = EXT_OBJECTS[o]
            if has_desc:
                ans = "no" if (s, o) == ("Q901", "Q954") else "yes"
                rec.append(record("text-qa", s, ans, name))
            if has_img:
                ans = "no" if (s, o) in [("Q900", "Q952"), ("Q904", "Q950")] else "yes"
                rec.append(record("vision-qa", s, ans, name))
    write(os.path.join(base, "replay_recovery", "answers.jsonl"), "".join(rec))


def annotations():
    rows = ["candidate,subject,relation,annotator,label\n"]
    rng = random.Random(5)
    for who, good in [("A", 91), ("B", 93)]:
        wrong = set(rng.sample(range(100), 100 - good))
        for i in range(100):
            label = "incorrect" if i in wrong else "correct"
            rows.append(csv_row(f"entity {i}", f"{WD}Q{7000 + i // 4}", "depicts", who, label))
    write(os.path.join(ROOT, "annotations.csv"), "".join(rows))


def taxonomy():
    rules = []
    with open(os.path.join(ROOT, "..", "data", "taxonomy_rules.csv"), encoding="utf-8") as f:
        for line in f:
            line = line.strip()
            if line and not line.startswith("#"):
                cat, kw = line.split(",", 1)
                rules.append((cat, kw.lower().split()))
    all_tokens = {t for _, kw in rules for t in kw}
    single = [(c, kw[0]) for c, kw in rules if len(kw) == 1]
    adjectives = ["small", "distant", "tall", "broken", "large", "bright", "ancient", "narrow"]
    rng = random.Random(3)
    out = ["surface,expected\n"]
    seen = set()
    n = 0
    while n < 180:
        cat, kw = rng.choice(single)
        phrase = f"{rng.choice(adjectives)} {kw}" if rng.random() < 0.5 else kw
        if phrase in seen:
            continue
        # the keyword must be the only rule token in the phrase
        if sum(t in all_tokens for t in phrase.split()) != 1:
            continue
        seen.add(phrase)
        out.append(csv_row(phrase, cat))
        n += 1
    unknown = ["Napoleon", "Renaissance", "1789", "Ovid", "Metamorphoses", "Annunciation", "Flemish school",
               "Louis XIV", "Trojan war", "Bacchus", "Venus", "Apollo", "Ulysses", "Minerva",
               "Hercules", "Diana", "seventeenth century", "Second Empire", "Bible", "Orpheus"]
    unknown = [u for u in unknown if not any(t in all_tokens for t in u.lower().split())]
    assert len(unknown) == 20, unknown
    for u in unknown:
        out.append(csv_row(u, "unknown"))
    write(os.path.join(ROOT, "taxonomy_200.csv"), "".join(out))


if __name__ == "__main__":
    mini()
    extend()
    annotations()
    taxonomy()
