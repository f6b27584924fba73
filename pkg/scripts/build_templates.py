"""Regenerate src/groundkit/instructions/data/templates.json.

Published exemplars keep ids 1..k in each set; the rest are paraphrases built
from verb x target-phrase grids. Output is sorted and stable, so rerunning
this script must leave the committed file unchanged.
"""

import itertools
import json
from pathlib import Path

OUT = Path(__file__).resolve().parents[1] / "src/groundkit/instructions/data/templates.json"

TEXTUAL_EXEMPLARS = [
    "Do you see the text '{text}'? Please click on it.",
    "Please locate the user interface component marked with the text `{text}` and then proceed to click on it.",
    "Make your way to the `{text}` label with your cursor.",
    "You are required to find the element associated with the text `{text}` and then move your cursor to hover over it.",
]
TEXTUAL_VERBS = [
    "Click on", "Click", "Select", "Press", "Hover over", "Move your cursor to",
    "Point at", "Go to", "Find and click", "Locate and click", "Tap", "Put the pointer on",
]
TEXTUAL_TARGETS = [
    "the text '{text}'", "the '{text}' label", "the element that reads '{text}'",
    "the item labeled `{text}`", "the words \"{text}\"", "the entry showing '{text}'",
    "the `{text}` text", "the component with the text '{text}'",
]

GENERAL_EXEMPLARS = ["Click on the following element: {text}"]
GENERAL_VERBS = [
    "Click", "Click on", "Select", "Press", "Activate", "Hover over", "Move the mouse to",
    "Point to", "Interact with", "Choose", "Open", "Target", "Go to", "Use",
    "Move your cursor onto", "Tap", "Put your mouse on",
]
GENERAL_TARGETS = [
    "the {text} element", "the element named '{text}'", "the '{text}' control",
    "the UI element '{text}'", "the component called {text}", "the {text} item",
    "the interface element labeled '{text}'",
]

SPATIAL_EXEMPLARS = [
    ("right_of", "Place your mouse on the element directly to the right of \"{element}\"."),
    ("left_of", "Hover your mouse on the element immediately to the left of \"{element}\"."),
    ("between", "Hover your mouse on the element between \"{element_1}\" and \"{element_2}\"."),
    ("above", "Place your mouse on the element directly above \"{element}\"."),
]
SPATIAL_EXTRA = [
    ("below", "Place your mouse on the element directly below \"{element}\"."),
    ("right_of", "Click the element immediately to the right of \"{element}\"."),
    ("right_of", "Select the item just right of \"{element}\"."),
    ("left_of", "Click the element directly to the left of \"{element}\"."),
    ("left_of", "Select the item just left of \"{element}\"."),
    ("above", "Click the element immediately above \"{element}\"."),
    ("above", "Select the item right above \"{element}\"."),
    ("below", "Click the element immediately below \"{element}\"."),
    ("below", "Select the item right under \"{element}\"."),
    ("between", "Click the element located between \"{element_1}\" and \"{element_2}\"."),
    ("between", "Select the item that sits between \"{element_1}\" and \"{element_2}\"."),
]


def numbered(texts):
    return [{"id": i, "text": t} for i, t in enumerate(texts, 1)]


def main():
    textual = TEXTUAL_EXEMPLARS + [f"{v} {t}." for v, t in itertools.product(TEXTUAL_VERBS, TEXTUAL_TARGETS)]
    general = GENERAL_EXEMPLARS + [f"{v} {t}." for v, t in itertools.product(GENERAL_VERBS, GENERAL_TARGETS)]
    spatial = [
        {"id": i, "relation": rel, "text": text}
        for i, (rel, text) in enumerate(SPATIAL_EXEMPLARS + SPATIAL_EXTRA, 1)
    ]
    data = {
        "version": 1,
        "textual": numbered(textual),
        "general": numbered(general),
        "spatial": spatial,
    }
    OUT.parent.mkdir(parents=True, exist_ok=True)
    OUT.write_text(json.dumps(data, indent=1, ensure_ascii=False) + "\n", encoding="utf-8")
    print(f"wrote {OUT}: {len(textual)} textual, {len(general)} general, {len(spatial)} spatial")


if __name__ == "__main__":
    main()
