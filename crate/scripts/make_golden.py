#!/usr/bin/env python3
"""Generate the golden tagging corpus from hand-marked templates.

Templates mark temporal spans as [surface|type] and entity spans as
{surface|LABEL}. Expected offsets come from the markup, never from the
tagger, so the file is an independent reference. Offsets count code points.

Writes crates/core/tests/data/golden.jsonl.
"""

import argparse
import json
import random
import re
from pathlib import Path

SLOTS = {
    "M": ["January", "February", "March", "April", "June", "July", "August", "September",
          "October", "November", "December"],
    "D": [str(d) for d in range(1, 29)],
    "Y": [str(y) for y in range(1650, 2024)],
    "W": ["Monday", "Tuesday", "Wednesday", "Thursday", "Friday", "Saturday", "Sunday"],
    "NW": ["two", "three", "four", "five", "six", "seven", "eight", "nine", "ten", "eleven",
           "twelve", "twenty", "thirty-five", "forty"],
    "OC": ["one", "two", "five", "seven", "nine", "ten", "eleven", "twelve", "3", "8"],
    "C": [str(n) for n in (2, 3, 4, 5, 6, 7, 8, 10, 12, 15, 20, 30, 45, 90)],
    "U": ["seconds", "minutes", "hours", "days", "weeks", "months", "years", "decades", "centuries"],
    "U1": ["hour", "day", "week", "month", "year", "decade", "century"],
    "AU": ["an hour", "a day", "a week", "a month", "a year", "a decade", "a minute"],
    "DP": ["morning", "afternoon", "evening", "night"],
    "S": ["spring", "summer", "autumn", "winter"],
    "F": ["daily", "weekly", "monthly", "annually", "hourly", "quarterly", "nightly"],
    "CL": ["6 pm", "9 am", "11:30 pm", "7 a.m.", "10 p.m.", "4pm", "12:15 am"],
    "H": ["07:45", "13:20", "18:00", "21:55", "9:05", "23:59"],
    "ORD": ["12th", "14th", "16th", "18th", "19th", "21st", "3rd"],
    "DEC": ["1920s", "1660s", "1780s", "1850s", "1990s", "2000s"],
    "ISO": ["1998-04-12", "2004/11/03", "1871-01-18", "2019-12-31", "1066-10-14", "2021/6/9"],
    "P": ["Anna Lindqvist", "Carl Moreau", "Elena Santos", "Pieter Jansen", "Ingrid Novak",
          "Hugo Brandt", "Mateo Rossi", "Ada Keller", "Oskar Dubois", "Leila Okafor"],
    "CITY": ["Uppsala", "Lyon", "Porto", "Kraków", "Leiden", "Graz", "Aarhus", "Turin",
             "Ghent", "Bergen", "Málaga", "Tartu"],
    "ORG": ["Royal Botanical Society", "Northern Railway Company", "National Library",
            "City Orchestra", "Maritime Museum", "Geological Survey"],
}

TEMPLATES = [
    "[Next <W>|time] she leaves for [<C> days|duration].",
    "[Next Monday|time] she leaves for [3 days|duration], as she does [every 4 years|set] since [January 1|date].",
    "{<P>|PER} was born on [<M> <D>, <Y>|date] in {<CITY>|LOC}.",
    "The treaty was signed on [<D> <M> <Y>|date] in {<CITY>|LOC}.",
    "The report was published on [<ISO>|date].",
    "The bridge opened in [<M> <Y>|date].",
    "{<P>|PER} died in [<Y>|date].",
    "The school closed on [<W>, <M> <D>|date].",
    "The storm hit the coast on [<W>, <M> <D>, <Y>|date].",
    "During the [<DEC>|date] the town grew quickly.",
    "The abbey dates from the [<ORD> century|date].",
    "They married in the [<S> of <Y>|date].",
    "The old mill burned down [<NW> years ago|date].",
    "We spoke to {<P>|PER} [yesterday|date].",
    "The library is closed on [<W>|date].",
    "The meeting starts at [<CL>|time] in the main hall.",
    "The last train leaves at [<H>|time].",
    "She woke at [<OC> o'clock|time] and went outside.",
    "They arrived [<W> <DP>|time] with little luggage.",
    "The lecture takes place in the [<DP>|time].",
    "The bells ring at [midnight|time] and at [noon|time].",
    "We will visit {<CITY>|LOC} [next <M>|time].",
    "Prices rose sharply [last year|time].",
    "The council reviewed the budget [this week|time].",
    "The vote was held [this <S>|time].",
    "The repairs took [<C> <U>|duration].",
    "The journey lasted [<NW> and a half hours|duration].",
    "He waited for [<AU>|duration] outside the station.",
    "The call lasted [half an hour|duration].",
    "The strike went on for [several weeks|duration].",
    "It rained for [a few days|duration] without pause.",
    "The hall is cleaned [<F>|set].",
    "The committee meets [every <W>|set].",
    "Buses run [every <C> minutes|set] during the festival.",
    "She swims [twice a week|set].",
    "{<P>|PER} visits {<CITY>|LOC} [three times a year|set].",
    "The café is closed on [<W>s|set].",
    "The festival takes place [each <S>|set].",
    "The council meets [every other week|set].",
    "{<P>|PER} and {<P>|PER} founded the {<ORG>|ORG} in [<Y>|date].",
    "The {<ORG>|ORG} moved its offices to {<CITY>|LOC} on [<M> <D>|date].",
    "{<P>|PER} painted the ceiling of the chapel in {<CITY>|LOC}.",
    "The soup was far too salty for most of the guests.",
    "The hall seats <C> people and has <C> doors.",
    "The road to {<CITY>|LOC} is <C> kilometres long.",
    "In [<Y>|date], {<P>|PER} spent [<NW> months|duration] in {<CITY>|LOC}.",
    "The museum reopened [today|date] after [<NW> years|duration] of work.",
    "The ferry departs [tomorrow morning|time] from {<CITY>|LOC}.",
    "The flood of [<M> <Y>|date] destroyed the harbour.",
    "we met on [<w>|date] at the market.",
    "The [<ISO>|date] release was delayed by [<C> days|duration].",
    "The archive holds letters from [<M> <D>|date] and [<M> <D>|date].",
    "Rehearsals run from [<CL>|time] to [<H>|time] [<F>|set].",
    "The war lasted [<C> years|duration] and ended in [<Y>|date].",
    "The clock tower was built in the [<ORD> century|date] by the {<ORG>|ORG}.",
    "{<CITY>|LOC} hosted the games in [<Y>|date] and again in [<Y>|date].",
    "{Zoë Martín|PER} returned to {São Paulo|LOC} in [<M> <Y>|date].",
    "The {<ORG>|ORG} publishes a bulletin [<F>|set] and a survey [every <C> years|set].",
    "see you [next week|time], {<P>|PER} said.",
    "The garden was planted [<NW> centuries ago|date] by monks from {<CITY>|LOC}.",
]

MARK = re.compile(r"\[([^\[\]|]+)\|(date|time|duration|set)\]|\{([^{}|]+)\|([A-Z]+)\}")
SLOT = re.compile(r"<([A-Za-z0-9]+)>")


def fill(template, r):
    def sub(m):
        name = m.group(1)
        if name == "w":
            return r.choice(SLOTS["W"]).lower()
        return r.choice(SLOTS[name])

    return SLOT.sub(sub, template)


def unmark(marked):
    text, temporal, entities = [], [], []
    pos = 0
    cursor = 0
    for m in MARK.finditer(marked):
        plain = marked[cursor:m.start()]
        text.append(plain)
        pos += len(plain)
        surface = m.group(1) or m.group(3)
        start, end = pos, pos + len(surface)
        if m.group(1):
            temporal.append({"type": m.group(2), "start": start, "end": end, "surface": surface})
        else:
            entities.append({"start": start, "end": end, "label": m.group(4), "surface": surface})
        text.append(surface)
        pos = end
        cursor = m.end()
    text.append(marked[cursor:])
    return "".join(text), temporal, entities


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--per-template", type=int, default=4)
    ap.add_argument("--out", type=Path, default=Path("crates/core/tests/data/golden.jsonl"))
    args = ap.parse_args()

    r = random.Random(args.seed)
    seen = set()
    rows = []
    for template in TEMPLATES:
        tries = 0
        made = 0
        while made < args.per_template and tries < 50:
            tries += 1
            text, temporal, entities = unmark(fill(template, r))
            if text in seen:
                continue
            seen.add(text)
            made += 1
            rows.append({"text": text, "temporal": temporal, "entities": entities})
    args.out.parent.mkdir(parents=True, exist_ok=True)
    with args.out.open("w", encoding="utf-8") as f:
        for i, row in enumerate(rows):
            row = {"id": f"g{i:03d}", **row}
            f.write(json.dumps(row, ensure_ascii=False) + "\n")
    print(f"wrote {len(rows)} sentences to {args.out}")


if __name__ == "__main__":
    main()
