#!/usr/bin/env python3
"""Regenerates fixtures/corpus: synthetic source files laid out as
<Language>/<repo>/<file>. Deterministic for a given seed."""

import argparse
import random
import shutil
from pathlib import Path

WORDS = (
    "account alpha beta buffer cache client config count cursor data delta entry event field file filter "
    "frame graph handler index item key layer limit list logger matrix message node offset order packet "
    "parser path point queue record region report request result route row sample scope score session "
    "shape signal size slot source stack state stream table task token total tree user value vector window"
).split()

PYTHON = [
    "def {f}({a}, {b}):\n    if {a} is None:\n        return {b}\n    return {a} + {b}\n",
    "class {C}:\n    def __init__(self, {a}):\n        self.{a} = {a}\n        self.{b} = []\n\n    def {f}(self):\n        return len(self.{b})\n",
    "import os\nimport sys\nfrom collections import {C}\n",
    "for {a} in range({n}):\n    {b}.append({a} * {n})\nprint({b})\n",
    "try:\n    {a} = {f}({b})\nexcept ValueError as err:\n    print('bad', err)\n",
    "with open('{a}.txt') as fh:\n    {b} = [line.strip() for line in fh]\n",
    "def {f}(*args, **kwargs):\n    \"\"\"Return the {a}.\"\"\"\n    return {{k: v for k, v in kwargs.items() if v}}\n",
    "if __name__ == '__main__':\n    {f}(sys.argv[1:])\n",
    "{a} = lambda x: x ** {n}\n{b} = list(map({a}, [1, 2, 3]))\n",
]

JAVA = [
    "public class {C} {{\n    private int {a};\n    private String {b};\n\n    public {C}(int {a}) {{\n        this.{a} = {a};\n    }}\n}}\n",
    "public static void main(String[] args) {{\n    System.out.println(\"{a}\" + args.length);\n}}\n",
    "import java.util.List;\nimport java.util.ArrayList;\n",
    "@Override\npublic String toString() {{\n    return \"{C}[\" + {a} + \"]\";\n}}\n",
    "for (int i = 0; i < {n}; i++) {{\n    {a}.add(new {C}(i));\n}}\n",
    "public List<{C}> {f}() throws Exception {{\n    List<{C}> {b} = new ArrayList<>();\n    return {b};\n}}\n",
    "try {{\n    {f}();\n}} catch (IOException e) {{\n    throw new RuntimeException(e);\n}}\n",
    "private final Map<String, Integer> {a} = new HashMap<>();\n",
    "package com.{a}.{b};\n",
]

HTML = [
    "<!DOCTYPE html>\n<html>\n<head>\n  <title>{C}</title>\n  <meta charset=\"utf-8\">\n</head>\n",
    "<div class=\"{a}\">\n  <p>{a} {b} {c}</p>\n</div>\n",
    "<ul id=\"{b}\">\n  <li><a href=\"/{a}\">{C}</a></li>\n  <li><a href=\"/{b}\">{b}</a></li>\n</ul>\n",
    "<table>\n  <tr><th>{a}</th><th>{b}</th></tr>\n  <tr><td>{n}</td><td>{c}</td></tr>\n</table>\n",
    "<form action=\"/{f}\" method=\"post\">\n  <input type=\"text\" name=\"{a}\">\n  <button type=\"submit\">{C}</button>\n</form>\n",
    "<body>\n  <h1>{C}</h1>\n  <img src=\"{a}.png\" alt=\"{b}\">\n</body>\n</html>\n",
    "<link rel=\"stylesheet\" href=\"{a}.css\">\n<script src=\"{b}.js\"></script>\n",
    "<span style=\"color: red\">{a}</span><br>\n",
]

SQL = [
    "CREATE TABLE {a} (\n  id INTEGER PRIMARY KEY,\n  {b} VARCHAR({n}) NOT NULL,\n  {c} INTEGER DEFAULT 0\n);\n",
    "SELECT {b}, COUNT(*) AS total\nFROM {a}\nWHERE {c} > {n}\nGROUP BY {b}\nORDER BY total DESC;\n",
    "INSERT INTO {a} ({b}, {c}) VALUES ('{d}', {n});\n",
    "UPDATE {a} SET {b} = '{d}' WHERE id = {n};\n",
    "DELETE FROM {a} WHERE {c} IS NULL;\n",
    "SELECT t.{b}, u.{c}\nFROM {a} t\nLEFT JOIN {d} u ON u.id = t.{d}_id;\n",
    "CREATE INDEX idx_{a}_{b} ON {a} ({b});\n",
    "ALTER TABLE {a} ADD COLUMN {d} TEXT;\n",
    "BEGIN TRANSACTION;\nDROP TABLE IF EXISTS {b};\nCOMMIT;\n",
]

LISP = [
    "(defun {f} ({a} {b})\n  (if (null {a})\n      {b}\n      (cons (car {a}) ({f} (cdr {a}) {b}))))\n",
    "(defvar *{a}* {n})\n",
    "(let ((({a} (list 1 2 3))\n      ({b} nil))\n  (dolist (x {a})\n    (push x {b}))\n  {b})\n",
    "(defmacro {f} (&rest body)\n  `(progn ,@body))\n",
    "(setq {a} (mapcar #'(lambda (x) (* x {n})) {b}))\n",
    "(format t \"~a: ~a~%\" '{a} {b})\n",
    "(cond ((eq {a} '{b}) t)\n      ((numberp {a}) (+ {a} {n}))\n      (t nil))\n",
    "(defparameter *{b}* (make-hash-table :test #'equal))\n",
]

GO = [
    "package {a}\n",
    "import (\n\t\"fmt\"\n\t\"strings\"\n)\n",
    "func {F}({a} int, {b} string) (string, error) {{\n\tif {a} < 0 {{\n\t\treturn \"\", fmt.Errorf(\"bad {a}\")\n\t}}\n\treturn strings.Repeat({b}, {a}), nil\n}}\n",
    "type {C} struct {{\n\t{A} int\n\t{B} []string\n}}\n",
    "func (s *{C}) {F}() int {{\n\treturn len(s.{B})\n}}\n",
    "for i := 0; i < {n}; i++ {{\n\t{a} := make([]int, i)\n\t_ = {a}\n}}\n",
    "{a}, err := {f}({b})\nif err != nil {{\n\treturn err\n}}\n",
    "go func() {{\n\tdefer wg.Done()\n\tch <- {n}\n}}()\n",
    "var {a} = map[string]int{{\"{b}\": {n}}}\n",
]

SHELL = [
    "#!/bin/sh\nset -e\n",
    "{A}=\"${{{A}:-{n}}}\"\nexport {A}\n",
    "if [ -f \"${a}\" ]; then\n  echo \"found ${a}\"\nelse\n  echo \"missing\" >&2\n  exit 1\nfi\n",
    "for {a} in $(ls /tmp/{b}); do\n  cp \"${a}\" /var/{c}/\ndone\n",
    "{f}() {{\n  local {a}=\"$1\"\n  grep -v '^#' \"${a}\" | wc -l\n}}\n",
    "case \"$1\" in\n  start) {f} ;;\n  stop) kill $(cat /run/{a}.pid) ;;\n  *) echo \"usage: $0 start|stop\" ;;\nesac\n",
    "while read -r {a}; do\n  echo \"${a}\" >> {b}.log\ndone < {c}.txt\n",
    "mkdir -p \"$HOME/.{a}\" && cd \"$HOME/.{a}\" || exit\n",
]

HASKELL = [
    "module {C} where\n",
    "import qualified Data.Map as Map\nimport Data.List (sortBy)\n",
    "{f} :: Int -> [Int] -> [Int]\n{f} {a} = map (+ {a})\n",
    "data {C} = {C}\n  {{ {a} :: Int\n  , {b} :: String\n  }} deriving (Show, Eq)\n",
    "{f} :: Maybe Int -> Int\n{f} Nothing = 0\n{f} (Just {a}) = {a} * {n}\n",
    "main :: IO ()\nmain = do\n  {a} <- getLine\n  putStrLn ({a} ++ \"{b}\")\n",
    "{f} xs = [x | x <- xs, x `mod` {n} == 0]\n",
    "instance Show {C} where\n  show _ = \"{a}\"\n",
    "{f} {a} = case {a} of\n  [] -> Nothing\n  (y:_) -> Just y\n",
]

LANGUAGES = {
    "Python": PYTHON,
    "Java": JAVA,
    "HTML": HTML,
    "SQL": SQL,
    "LISP": LISP,
    "Go": GO,
    "BourneShellScript": SHELL,
    "Haskell": HASKELL,
}


def render(template, rng, vocab):
    a, b, c, d = rng.sample(vocab, 4)
    f = rng.choice(vocab) + rng.choice(["_" + w for w in vocab] + [""])
    return template.format(
        a=a, b=b, c=c, d=d, f=f,
        A=a.upper(), B=b.capitalize(), C=a.capitalize() + b.capitalize(), F=f.capitalize(),
        n=rng.randint(1, 999),
    )


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", type=Path, default=Path(__file__).parent / "corpus")
    ap.add_argument("--seed", type=int, default=2024)
    ap.add_argument("--repos", type=int, default=8)
    ap.add_argument("--files", type=int, default=6)
    args = ap.parse_args()

    rng = random.Random(args.seed)
    if args.out.exists():
        shutil.rmtree(args.out)
    for lang, templates in LANGUAGES.items():
        for r in range(args.repos):
            vocab = rng.sample(WORDS, 12)
            repo = args.out / lang / f"{vocab[0]}-{vocab[1]}"
            repo.mkdir(parents=True)
            for k in range(args.files):
                blocks = [render(rng.choice(templates), rng, vocab) for _ in range(rng.randint(3, 6))]
                # no extensions: labels come from the directory
                (repo / f"file{k}").write_text("\n".join(blocks))


if __name__ == "__main__":
    main()
