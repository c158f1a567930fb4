#!/usr/bin/env python3
"""Write the 12-thread pipeline fixture (three threads per quartile) and the
canned model responses used to build its replay store.

Outputs fixtures/pipeline/threads.jsonl and fixtures/pipeline/responses.json.
The replay store itself is built from these by `autocombat replay-build`.
"""

import json
from datetime import datetime, timedelta, timezone
from pathlib import Path

OUT = Path(__file__).resolve().parent.parent / "fixtures" / "pipeline"
T0 = datetime(2021, 3, 1, 9, 0, tzinfo=timezone.utc)


def ts(hours):
    return (T0 + timedelta(hours=hours)).strftime("%Y-%m-%dT%H:%M:%SZ")


def thread(qid, aid, title, body, tags, versions, comments, links):
    return {
        "question_id": qid,
        "answer_id": aid,
        "question_title": title,
        "question_body": body,
        "question_tags": tags,
        "versions": [
            {"revision_ordinal": i + 1, "body_markdown": text, "timestamp": ts(h)}
            for i, (h, text) in enumerate(versions)
        ],
        "comments": [
            {"id": f"{aid}-c{i + 1}", "author": f"user{i + 1}", "body": text, "timestamp": ts(h), "gold_label": label}
            for i, (h, label, text) in enumerate(comments)
        ],
        "concern_links": [{"comment_id": f"{aid}-c{c}", "revision_ordinal": r} for c, r in links],
    }


def fence(lang, code):
    return f"```{lang}\n{code}\n```"


THREADS = []
RESPONSES = {}


def refine(concerns, used_question, changes, answer):
    return {
        "concerns": concerns,
        "used_question": used_question,
        "change_log": [{"concern": c, "change": ch} for c, ch in changes],
        "improved_answer": answer,
    }


def classify(*items):
    return {"concerns": [{"concern": c, "comment": n} for c, n in items]}


# ---- Q1: one comment -------------------------------------------------------

v1 = "Handle the `FormClosing` event:\n\n" + fence(
    "csharp",
    "private void Form1_FormClosing(object sender, FormClosingEventArgs e)\n{\n    // block Alt+F4\n}",
)
v2 = "Handle the `FormClosing` event and cancel it:\n\n" + fence(
    "csharp",
    "private void Form1_FormClosing(object sender, FormClosingEventArgs e)\n{\n    if (e.CloseReason == CloseReason.UserClosing)\n        e.Cancel = true;\n}",
)
THREADS.append(thread(
    "q101", "a101", "How to disable Alt+F4 closing a form?",
    "My WinForms app must not close when the user presses Alt+F4.", ["c#", "winforms"],
    [(0, v1), (5, v2)],
    [(2, "IA", "This handler does nothing. You have to set e.Cancel = true or the form still closes.")],
    [(1, 2)],
))
RESPONSES["a101"] = {
    "classify": classify(("The handler never sets e.Cancel = true, so the form still closes.", 1)),
    "refine": refine(
        ["The handler never sets e.Cancel = true, so the form still closes."], False,
        [("The handler never sets e.Cancel = true, so the form still closes.",
          "Set e.Cancel = true inside the FormClosing handler.")],
        "Handle the `FormClosing` event and cancel it:\n\n" + fence(
            "csharp",
            "private void Form1_FormClosing(object sender, FormClosingEventArgs e)\n{\n    e.Cancel = true;\n}",
        ),
    ),
}

v1 = "Iterate over the file object:\n\n" + fence("python", "f = open('data.txt')\nfor line in f:\n    print(line)")
v2 = "Iterate over the file object inside a `with` block:\n\n" + fence(
    "python", "with open('data.txt') as f:\n    for line in f:\n        print(line.rstrip())")
THREADS.append(thread(
    "q102", "a102", "Read a file line by line in Python", "", ["python", "file-io"],
    [(0, v1), (8, v2)],
    [(3, "IA", "The file is never closed. Use a with statement.")],
    [(1, 2)],
))
RESPONSES["a102"] = {
    "classify": classify(("The file is never closed; use a with statement.", 1)),
    # fenced output exercises fence stripping
    "refine": "```json\n" + json.dumps(refine(
        ["The file is never closed; use a with statement."], False,
        [("The file is never closed; use a with statement.", "Wrapped the loop in a with block.")],
        "Iterate over the file object inside a `with` block:\n\n" + fence(
            "python", "with open('data.txt') as f:\n    for line in f:\n        print(line)"),
    ), indent=2) + "\n```",
}

v1 = "Use `Collections.reverse`:\n\n" + fence("java", "List<Integer> xs = new ArrayList<>(List.of(1, 2, 3));\nCollections.reverse(xs);")
THREADS.append(thread(
    "q103", "a103", "Reverse a list in Java", "What is the simplest way?", ["java", "list"],
    [(0, v1)],
    [(4, "GC", "Thanks, this worked for me!")],
    [],
))
RESPONSES["a103"] = {
    "classify": classify(),
    "refine": refine([], False, [], v1),
}

# ---- Q2: two or three comments --------------------------------------------

v1 = "Rotate the element:\n\n" + fence("css", ".flip {\n  transform: rotate(180deg);\n}")
v2 = "Mirror the element horizontally with a negative scale:\n\n" + fence("css", ".flip {\n  transform: scaleX(-1);\n}")
THREADS.append(thread(
    "q201", "a201", "Flip an image horizontally with CSS", "I want a mirror image of a logo.", ["css", "html"],
    [(0, v1), (10, v2)],
    [(2, "IA", "rotate(180deg) turns it upside down, it does not mirror it. Use transform: scaleX(-1) for a horizontal flip."),
     (3, "GC", "Nice trick.")],
    [(1, 2)],
))
RESPONSES["a201"] = {
    "classify": classify(("rotate(180deg) turns the image upside down instead of mirroring it; use scaleX(-1).", 1)),
    "refine": refine(
        ["rotate(180deg) turns the image upside down instead of mirroring it; use scaleX(-1)."], False,
        [("rotate(180deg) turns the image upside down instead of mirroring it; use scaleX(-1).",
          "Replaced the rotation with transform: scaleX(-1).")],
        "Mirror the element horizontally:\n\n" + fence("css", ".flip {\n  transform: scaleX(-1);\n}"),
    ),
}

v1 = "Send the token in the header:\n\n" + fence(
    "javascript", "const token = getToken();\nfetch(url, { headers: { Authorization: `Bearer ${token}` } });")
v2 = "`getToken` is async, so await it before sending the header:\n\n" + fence(
    "javascript", "const token = await getToken();\nconst res = await fetch(url, { headers: { Authorization: `Bearer ${token}` } });")
THREADS.append(thread(
    "q202", "a202", "Authorization header is [object Promise]", "The server receives `Bearer [object Promise]`.",
    ["javascript", "fetch-api"],
    [(0, v1), (6, v2)],
    [(1, "IA", "getToken returns a Promise, you need to await it."),
     (2, "INA", "You should also explain refresh tokens."),
     (3, "GC", "+1")],
    [(1, 2)],
))
RESPONSES["a202"] = {
    # the model also flags the generic comment
    "classify": classify(("getToken returns a Promise that must be awaited.", 1), ("+1", 2)),
    "refine": refine(
        ["getToken returns a Promise that must be awaited."], True,
        [("getToken returns a Promise that must be awaited.", "Awaited getToken before building the header.")],
        "`getToken` returns a Promise, so await it:\n\n" + fence(
            "javascript", "const token = await getToken();\nfetch(url, { headers: { Authorization: `Bearer ${token}` } });"),
    ),
}

v1 = "Call `sort`:\n\n" + fence("python", "nums.sort()")
v2 = "Call `sort`, which works in place:\n\n" + fence("python", "nums.sort()")
THREADS.append(thread(
    "q203", "a203", "Sort a list of numbers", "", ["python", "sorting"],
    [(0, v1), (1, v2)],
    [(4, "IA", "Worth mentioning that sorted(nums) returns a new list while nums.sort() returns None."),
     (5, "GC", "Thanks")],
    [],
))
RESPONSES["a203"] = {
    "classify": classify(("Mention that sorted(nums) returns a new list while nums.sort() returns None.", 1)),
    "refine": refine(
        ["Mention that sorted(nums) returns a new list while nums.sort() returns None."], False,
        [("Mention that sorted(nums) returns a new list while nums.sort() returns None.",
          "Added the sorted() alternative and the None return value.")],
        "Call `sort`, which works in place and returns `None`:\n\n" + fence(
            "python", "nums.sort()\n# or keep the original list\nordered = sorted(nums)"),
    ),
}

# ---- Q3: four or five comments --------------------------------------------

v1 = "Compare with `==`:\n\n" + fence("java", "if (input == \"yes\") {\n    proceed();\n}")
v2 = "Compare contents with `equals`:\n\n" + fence("java", "if (input.equals(\"yes\")) {\n    proceed();\n}")
v3 = "Compare contents with `equals`, calling it on the literal so a null input is safe:\n\n" + fence(
    "java", "if (\"yes\".equals(input)) {\n    proceed();\n}")
THREADS.append(thread(
    "q301", "a301", "String comparison fails in Java", "My if never runs even when I type yes.", ["java", "string"],
    [(0, v1), (3, v2), (9, v3)],
    [(1, "GC", "Classic question."),
     (2, "IA", "== compares references, not contents. Use equals()."),
     (4, "GC", "This saved my day"),
     (6, "IA", "Also handle null: \"yes\".equals(input) avoids a NullPointerException.")],
    [(2, 2), (4, 3)],
))
RESPONSES["a301"] = {
    "classify": classify(("== compares references, not contents; use equals().", 2),
                         ("Call equals on the literal to avoid a NullPointerException.", 4)),
    "refine": refine(
        ["== compares references, not contents; use equals().",
         "Call equals on the literal to avoid a NullPointerException."], False,
        [("== compares references, not contents; use equals().", "Switched to equals."),
         ("Call equals on the literal to avoid a NullPointerException.", "Called equals on the literal.")],
        "Compare contents with `equals`, calling it on the literal so null is safe:\n\n" + fence(
            "java", "if (\"yes\".equals(input)) {\n    proceed();\n}"),
    ),
}

v1 = "Make the handler async:\n\n" + fence("csharp", "public async void LoadData()\n{\n    var rows = await repo.FetchAsync();\n    Render(rows);\n}")
v2 = "Make the method return `Task` so callers can await it and see exceptions:\n\n" + fence(
    "csharp", "public async Task LoadDataAsync()\n{\n    var rows = await repo.FetchAsync();\n    Render(rows);\n}")
THREADS.append(thread(
    "q302", "a302", "Exceptions from async method are lost", "", ["c#", "async-await"],
    [(0, v1), (12, v2)],
    [(1, "GC", "Good answer overall."),
     (2, "IA", "async void swallows exceptions; return Task instead."),
     (3, "INA", "Maybe add ConfigureAwait(false)?"),
     (5, "GC", "Upvoted.")],
    [(2, 2)],
))
RESPONSES["a302"] = {
    # misses the addressed concern
    "classify": classify(),
    "refine": refine(
        ["async void swallows exceptions; return Task instead."], False,
        [("async void swallows exceptions; return Task instead.", "Changed the return type to Task.")],
        "Return `Task` so callers can await it and observe exceptions:\n\n" + fence(
            "csharp", "public async Task LoadDataAsync()\n{\n    var rows = await repo.FetchAsync();\n    Render(rows);\n}"),
    ),
}

v1 = "Use a default list:\n\n" + fence("python", "def add(item, bucket=[]):\n    bucket.append(item)\n    return bucket")
v2 = "Use `None` as the default and create the list inside:\n\n" + fence(
    "python", "def add(item, bucket=None):\n    if bucket is None:\n        bucket = []\n    bucket.append(item)\n    return bucket")
THREADS.append(thread(
    "q303", "a303", "Function keeps old values between calls", "Each call returns items from earlier calls.",
    ["python", "function"],
    [(0, v1), (7, v2)],
    [(1, "IA", "The default list is created once and shared between calls. Use None as the default."),
     (2, "GC", "Wow, did not know that."),
     (3, "INA", "Link to the docs would help."),
     (4, "GC", "Same thing bit me last week."),
     (5, "GC", "Great explanation.")],
    [(1, 2)],
))
RESPONSES["a303"] = {
    "classify": classify(("The default list is shared between calls; use None as the default.", 1)),
    "refine": refine(
        ["The default list is shared between calls; use None as the default."], False,
        [("The default list is shared between calls; use None as the default.", "Defaulted to None and built the list inside.")],
        "Use `None` as the default and build the list inside the function:\n\n" + fence(
            "python", "def add(item, bucket=None):\n    if bucket is None:\n        bucket = []\n    bucket.append(item)\n    return bucket"),
    ),
}

# ---- Q4: six or more comments ---------------------------------------------

v1 = "Attach the handlers in a loop:\n\n" + fence(
    "javascript", "for (var i = 0; i < buttons.length; i++) {\n  buttons[i].onclick = function () { alert(i); };\n}")
v2 = "Declare the counter with `let` so each handler keeps its own value:\n\n" + fence(
    "javascript", "for (let i = 0; i < buttons.length; i++) {\n  buttons[i].onclick = () => alert(i);\n}")
THREADS.append(thread(
    "q401", "a401", "Every button alerts the same number", "", ["javascript", "closures"],
    [(0, v1), (9, v2)],
    [(1, "GC", "Interesting."),
     (2, "IA", "With var every handler sees the final i. Use let."),
     (3, "GC", "Came here from Google."),
     (4, "GC", "Still relevant in 2021."),
     (5, "INA", "An IIFE version would help older browsers."),
     (6, "GC", "Thanks!")],
    [(2, 2)],
))
RESPONSES["a401"] = {
    "classify": classify(("With var every handler sees the final i; use let.", 2),
                         ("Still relevant in 2021.", 4)),
    "refine": refine(
        ["With var every handler sees the final i; use let."], False,
        [("With var every handler sees the final i; use let.", "Declared the counter with let.")],
        "Declare the counter with `let` so each handler captures its own value:\n\n" + fence(
            "javascript", "for (let i = 0; i < buttons.length; i++) {\n  buttons[i].onclick = function () { alert(i); };\n}"),
    ),
}

v1 = "Remove inside the loop:\n\n" + fence("java", "for (String k : map.keySet()) {\n    if (k.isEmpty()) map.remove(k);\n}")
v2 = "Remove through the iterator:\n\n" + fence(
    "java", "Iterator<String> it = map.keySet().iterator();\nwhile (it.hasNext()) {\n    if (it.next().isEmpty()) it.remove();\n}")
v3 = "Use `removeIf` on the key set:\n\n" + fence("java", "map.keySet().removeIf(String::isEmpty);")
THREADS.append(thread(
    "q402", "a402", "ConcurrentModificationException when removing from HashMap", "", ["java", "hashmap"],
    [(0, v1), (4, v2), (11, v3)],
    [(1, "GC", "Had the same issue."),
     (2, "IA", "This throws ConcurrentModificationException. Remove through an Iterator."),
     (3, "GC", "Good question."),
     (6, "IA", "On Java 8 you can just use removeIf."),
     (7, "GC", "Nice."),
     (8, "GC", "Works."),
     (9, "INA", "What about ConcurrentHashMap?")],
    [(2, 2), (4, 3)],
))
RESPONSES["a402"] = {
    "classify": classify(("Removing inside the loop throws ConcurrentModificationException; use an Iterator.", 2),
                         ("On Java 8 use removeIf.", 4)),
    "refine": refine(
        ["Removing inside the loop throws ConcurrentModificationException; use an Iterator.", "On Java 8 use removeIf."],
        False,
        [("Removing inside the loop throws ConcurrentModificationException; use an Iterator.", "Removed through the key set instead of the loop."),
         ("On Java 8 use removeIf.", "Used removeIf.")],
        "Use `removeIf` on the key set instead of removing inside the loop:\n\n" + fence(
            "java", "map.keySet().removeIf(String::isEmpty);"),
    ),
}

v1 = "Use requests:\n\n" + fence("python", "resp = requests.get(url)\ndata = resp.json()")
v2 = "Use requests with a timeout and check the status:\n\n" + fence(
    "python", "resp = requests.get(url, timeout=10)\nresp.raise_for_status()\ndata = resp.json()")
THREADS.append(thread(
    "q403", "a403", "Script hangs forever fetching JSON", "The API sometimes never responds and my cron job piles up.",
    ["python", "python-requests"],
    [(0, v1), (10, v2)],
    [(1, "GC", "Upvoted."),
     (2, "IA", "Without a timeout requests can wait forever; pass timeout=."),
     (3, "GC", "lol"),
     (4, "IA", "Call raise_for_status() before parsing."),
     (5, "GC", "Helpful."),
     (6, "GC", "Thank you."),
     (7, "INA", "Consider retries with urllib3."),
     (8, "GC", "Bookmarked.")],
    [(2, 2), (4, 2)],
))
RESPONSES["a403"] = {
    "classify": classify(("Without a timeout requests can wait forever; pass timeout=.", 2),
                         ("Call raise_for_status() before parsing.", 4)),
    "refine": refine(
        ["Without a timeout requests can wait forever; pass timeout=.", "Call raise_for_status() before parsing."],
        True,
        [("Without a timeout requests can wait forever; pass timeout=.", "Added timeout=10."),
         ("Call raise_for_status() before parsing.", "Checked the status before parsing.")],
        "Pass a timeout so the call cannot hang, and check the status:\n\n" + fence(
            "python", "resp = requests.get(url, timeout=10)\nresp.raise_for_status()\ndata = resp.json()"),
    ),
}


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    with open(OUT / "threads.jsonl", "w") as f:
        for t in THREADS:
            f.write(json.dumps(t, ensure_ascii=False) + "\n")
    with open(OUT / "responses.json", "w") as f:
        json.dump(RESPONSES, f, indent=2, ensure_ascii=False, sort_keys=True)
        f.write("\n")


if __name__ == "__main__":
    main()
