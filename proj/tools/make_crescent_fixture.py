#!/usr/bin/env python3
"""Writes the bundled intelligence-report fixture.

41 short reports over Person, Location, Phone and Date entities. Three
plots of four or more people, each with its own three places, phones and
dates, run through eight reports apiece; the other seventeen reports are
background chatter. Output is deterministic.

usage: make_crescent_fixture.py OUT_DIR
"""

import csv
import json
import random
import sys
from pathlib import Path

SEED = 20061

FIRST = ["Abdul", "Bagwant", "Carlos", "Dmitri", "Elena", "Faisal", "Gita", "Hamid",
         "Ivan", "Jamal", "Karim", "Lena", "Mustafa", "Nadia", "Omar", "Pavel",
         "Quinn", "Rashid", "Sami", "Tariq", "Umar", "Vera", "Walid", "Yusuf", "Zara",
         "Anwar", "Boris", "Celia", "Dawud", "Emil"]
LAST = ["Hakim", "Dhaliwal", "Morales", "Volkov", "Petrova", "Nasser", "Rao", "Saleh",
        "Orlov", "Farouk", "Haddad", "Kurz", "Aziz", "Barakat", "Shah", "Novak",
        "Reyes", "Qureshi", "Mansour", "Latif", "Jaber", "Steiner", "Khoury", "Darwish",
        "Malik", "Sadiq", "Lund", "Ferrer", "Ibrahim", "Weiss"]
PLACES = ["Boston", "Atlanta", "New York", "Charlotte", "Richmond", "Baltimore",
          "Denver", "Phoenix", "Houston", "Miami", "Chicago", "Detroit", "Seattle",
          "Portland", "Tampa", "Nashville", "Memphis", "Cleveland", "Dallas", "Austin"]


def phone(rng):
    return "%03d-%03d-%04d" % (rng.randint(200, 989), rng.randint(200, 989), rng.randint(0, 9999))


def date(rng):
    return "2003-%02d-%02d" % (rng.randint(1, 12), rng.randint(1, 28))


def main(out_dir):
    rng = random.Random(SEED)
    people = ["%s %s" % (f, l) for f, l in zip(FIRST, LAST)]
    rng.shuffle(people)

    plots = []
    cursor = 0
    places = PLACES[:]
    rng.shuffle(places)
    for size in (5, 4, 4):
        plots.append({
            "people": people[cursor:cursor + size],
            "places": places[len(plots) * 3:len(plots) * 3 + 3],
            "phones": [phone(rng) for _ in range(3)],
            "dates": [date(rng) for _ in range(3)],
        })
        cursor += size
    noise_people = people[cursor:]
    noise_places = places[9:]
    noise_phones = [phone(rng) for _ in range(8)]
    noise_dates = [date(rng) for _ in range(10)]

    reports = []
    for p, plot in enumerate(plots):
        for k in range(8):
            cast = rng.sample(plot["people"], rng.randint(3, len(plot["people"])))
            ents = [(n, "Person") for n in cast]
            ents += [(n, "Location") for n in rng.sample(plot["places"], rng.randint(2, 3))]
            ents += [(n, "Phone") for n in rng.sample(plot["phones"], rng.randint(2, 3))]
            ents += [(n, "Date") for n in rng.sample(plot["dates"], rng.randint(1, 2))]
            if rng.random() < 0.3:
                ents.append((rng.choice(noise_people), "Person"))
            reports.append(("plot", ents))
    for _ in range(17):
        cast = rng.sample(noise_people, rng.randint(1, 3))
        ents = [(n, "Person") for n in cast]
        ents.append((rng.choice(noise_places), "Location"))
        if rng.random() < 0.5:
            ents.append((rng.choice(noise_phones), "Phone"))
        ents.append((rng.choice(noise_dates), "Date"))
        if rng.random() < 0.25:
            plot = rng.choice(plots)
            ents.append((rng.choice(plot["people"]), "Person"))
        reports.append(("noise", ents))
    rng.shuffle(reports)

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    docs = {}
    with open(out / "crescent.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["doc_id", "entity", "domain", "count"])
        for idx, (_, ents) in enumerate(reports, start=1):
            doc_id = "report-%02d" % idx
            seen = {}
            for name, dom in ents:
                seen[(name, dom)] = seen.get((name, dom), 0) + rng.randint(1, 2)
            for (name, dom), count in seen.items():
                w.writerow([doc_id, name, dom, count])
            persons = [n for n, d in seen if d == "Person"]
            where = [n for n, d in seen if d == "Location"]
            when = [n for n, d in seen if d == "Date"]
            calls = [n for n, d in seen if d == "Phone"]
            text = "On %s, %s met in %s." % (when[0], ", ".join(persons), " and ".join(where))
            if calls:
                text += " Calls were traced to %s." % ", ".join(calls)
            docs[doc_id] = text
    with open(out / "crescent.docs.json", "w") as fh:
        json.dump(docs, fh, indent=2, sort_keys=True)
        fh.write("\n")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else ".")
