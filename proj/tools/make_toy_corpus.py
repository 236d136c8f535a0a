#!/usr/bin/env python3
# Copyright 2026 The smt Authors.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
"""Writes the small cased Polish-English corpus under data/toy.

Sentences come from a handful of templates so that test and dev sentences
are covered by the training vocabulary. Fixed seed; re-running produces the
same files.
"""

import argparse
import os
import random

SUBJECTS = [
    ("Anna", "Anna"),
    ("Piotr", "Peter"),
    ("Marek", "Mark"),
    ("Ewa", "Eve"),
    ("Mój brat", "My brother"),
    ("Moja siostra", "My sister"),
    ("Nauczyciel", "The teacher"),
    ("Lekarz", "The doctor"),
]

# (polish verb, english verb, objects)
VERBS = [
    ("czyta", "reads", [("książkę", "a book"), ("gazetę", "the newspaper"), ("list", "a letter"),
                        ("nową książkę", "a new book")]),
    ("kupuje", "buys", [("chleb", "bread"), ("mleko", "milk"), ("samochód", "a car"),
                        ("nowy samochód", "a new car"), ("książkę", "a book")]),
    ("widzi", "sees", [("dom", "the house"), ("psa", "the dog"), ("kota", "the cat"),
                       ("duży dom", "a big house"), ("samochód", "a car")]),
    ("lubi", "likes", [("kawę", "coffee"), ("herbatę", "tea"), ("muzykę", "music"),
                       ("psa", "the dog")]),
    ("pisze", "writes", [("list", "a letter"), ("książkę", "a book")]),
]

ADVERBIALS = [
    ("", ""),
    ("w domu", "at home"),
    ("w Warszawie", "in Warsaw"),
    ("w Krakowie", "in Krakow"),
    ("dzisiaj", "today"),
    ("rano", "in the morning"),
    ("wieczorem", "in the evening"),
]

BASE_FORM = {"reads": "read", "buys": "buy", "sees": "see", "likes": "like", "writes": "write"}

# Acoustically close confusions for the simulated recognizer.
CONFUSIONS = {
    "czyta": "czyli", "kupuje": "kupuję", "widzi": "widzę", "lubi": "lubię", "pisze": "piszę",
    "domu": "dom", "kota": "kot", "psa": "pas", "rano": "rana", "list": "liść",
    "chleb": "klep", "mleko": "mleka", "kawę": "kawa", "anna": "ana", "marek": "marka",
}


def lower_first(s):
    return s[:1].lower() + s[1:] if not s.startswith(("Anna", "Piotr", "Marek", "Ewa")) else s


def make_pair(rng):
    subj_pl, subj_en = rng.choice(SUBJECTS)
    verb_pl, verb_en, objects = rng.choice(VERBS)
    obj_pl, obj_en = rng.choice(objects)
    adv_pl, adv_en = rng.choice(ADVERBIALS)
    question = rng.random() < 0.15
    if question:
        src = "Czy " + lower_first(subj_pl) + " " + verb_pl + " " + obj_pl
        en_subj = subj_en if subj_en in ("Anna", "Peter", "Mark", "Eve") else subj_en[0].lower() + subj_en[1:]
        tgt = "Does " + en_subj + " " + BASE_FORM[verb_en] + " " + obj_en
    else:
        src = subj_pl + " " + verb_pl + " " + obj_pl
        tgt = subj_en + " " + verb_en + " " + obj_en
    if adv_pl:
        src += " " + adv_pl
        tgt += " " + adv_en
    end = "?" if question else "."
    if not question and rng.random() < 0.2:
        extra_pl, extra_en = rng.choice([("i jest szczęśliwy", "and is happy"), ("ale jest zmęczony", "but is tired")])
        src += " , " + extra_pl
        tgt += " , " + extra_en
    return src.replace(" , ", ", ") + end, tgt.replace(" , ", ", ") + end


def asr_corrupt(rng, sentence, rate):
    words = sentence.lower().replace(",", " ").replace(".", " ").replace("?", " ").split()
    out = []
    for w in words:
        r = rng.random()
        if r < rate and w in CONFUSIONS:
            out.append(CONFUSIONS[w])
        elif r < rate * 0.3:
            continue
        else:
            out.append(w)
    return " ".join(out)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default=os.path.join(os.path.dirname(__file__), "..", "data", "toy"))
    ap.add_argument("--train", type=int, default=200)
    ap.add_argument("--dev", type=int, default=20)
    ap.add_argument("--test", type=int, default=24)
    ap.add_argument("--seed", type=int, default=7)
    args = ap.parse_args()

    rng = random.Random(args.seed)
    need = args.train + args.dev + args.test
    seen = set()
    pairs = []
    while len(pairs) < need:
        p = make_pair(rng)
        if p[0] in seen:
            continue
        seen.add(p[0])
        pairs.append(p)

    os.makedirs(args.out, exist_ok=True)
    splits = [("train", pairs[:args.train]), ("dev", pairs[args.train:args.train + args.dev]),
              ("test", pairs[args.train + args.dev:])]
    for name, rows in splits:
        with open(os.path.join(args.out, name + ".pl"), "w", encoding="utf-8") as f:
            f.writelines(s + "\n" for s, _ in rows)
        with open(os.path.join(args.out, name + ".en"), "w", encoding="utf-8") as f:
            f.writelines(t + "\n" for _, t in rows)
    with open(os.path.join(args.out, "test.asr.pl"), "w", encoding="utf-8") as f:
        for s, _ in splits[2][1]:
            f.write(asr_corrupt(rng, s, 0.12) + "\n")


if __name__ == "__main__":
    main()
