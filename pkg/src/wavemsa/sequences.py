"""Sequence input, scoring schemes and sum-of-pairs scoring."""

import io
import os
import string
from dataclasses import dataclass, field
from itertools import combinations

from .errors import FastaParseError, SchemeError
from .moa_index import Shape

GAP = "-"

ALPHABETS = {
    "dna": "ACGTN",
    "protein": "ACDEFGHIKLMNPQRSTVWYBZX*",
    "generic": string.ascii_uppercase,
}


@dataclass(frozen=True)
class SequenceSet:
    records: tuple
    alphabet: str = ALPHABETS["generic"]

    def __post_init__(self):
        records = tuple((str(i), str(r)) for i, r in self.records)
        object.__setattr__(self, "records", records)
        if len(records) < 2:
            raise ValueError("need >= 2 sequences, got %d" % len(records))
        for name, residues in records:
            if not residues:
                raise ValueError("sequence %r is empty" % name)
            bad = set(residues) - set(self.alphabet)
            if bad:
                raise ValueError("sequence %r has residues outside the alphabet: %s"
                                 % (name, "".join(sorted(bad))))

    @classmethod
    def from_strings(cls, *residues, alphabet=None):
        alphabet = alphabet or ALPHABETS["generic"]
        return cls(tuple(("s%d" % i, r) for i, r in enumerate(residues)),
                   alphabet=alphabet)

    @property
    def k(self):
        return len(self.records)

    @property
    def ids(self):
        return [name for name, _ in self.records]

    @property
    def residues(self):
        return [r for _, r in self.records]

    @property
    def shape(self):
        return Shape(tuple(len(r) + 1 for _, r in self.records))

    def __getitem__(self, i):
        return self.records[i][1]

    def __len__(self):
        return len(self.records)


def parse_fasta(text, alphabet="generic"):
    """Parse FASTA from a str, bytes or a readable text/binary stream.

    Raises FastaParseError for empty input, sequence lines before the first
    header, empty records, illegal characters and fewer than two records.
    """
    if hasattr(text, "read"):
        text = text.read()
    if isinstance(text, bytes):
        text = text.decode("ascii", errors="replace")
    letters = ALPHABETS.get(alphabet, alphabet)
    allowed = set(letters)

    records = []
    name, chunks, header_line = None, [], 0
    for lineno, raw in enumerate(io.StringIO(text), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith(">"):
            if name is not None:
                if not chunks:
                    raise FastaParseError("record %r has no sequence" % name,
                                          header_line)
                records.append((name, "".join(chunks)))
            name = line[1:].strip().split(None, 1)[0] if line[1:].strip() else ""
            chunks, header_line = [], lineno
            continue
        if name is None:
            raise FastaParseError("sequence data before the first '>' header",
                                  lineno)
        seq = line.upper().replace(" ", "")
        for ch in seq:
            if ch not in allowed:
                raise FastaParseError("illegal character %r" % ch, lineno)
        chunks.append(seq)
    if name is None:
        raise FastaParseError("no FASTA records found")
    if not chunks:
        raise FastaParseError("record %r has no sequence" % name, header_line)
    records.append((name, "".join(chunks)))
    if len(records) < 2:
        raise FastaParseError("need >= 2 sequences, found %d" % len(records))
    return SequenceSet(tuple(records), alphabet=letters)


def read_fasta(path, alphabet="generic"):
    with open(path, "rb") as fh:
        return parse_fasta(fh, alphabet=alphabet)


@dataclass(frozen=True)
class ScoringScheme:
    """Pairwise column costs; the defaults give the +1/0/-1/0 scheme.

    ``sub`` maps residue pairs to scores and, when given, replaces the
    match/mismatch rule for residue/residue pairs.  It is stored symmetric.
    """

    match: float = 1
    mismatch: float = 0
    gap: float = -1
    gapgap: float = 0
    sub: dict = field(default=None, compare=False, hash=False)

    def __post_init__(self):
        if self.sub is not None:
            table = {}
            for (x, y), v in self.sub.items():
                x, y = x.upper(), y.upper()
                if (y, x) in table and table[(y, x)] != v:
                    raise SchemeError("substitution table is not symmetric at %s/%s"
                                      % (x, y))
                table[(x, y)] = v
                table[(y, x)] = v
            object.__setattr__(self, "sub", table)

    @property
    def integral(self):
        values = [self.match, self.mismatch, self.gap, self.gapgap]
        if self.sub:
            values.extend(self.sub.values())
        return all(float(v).is_integer() for v in values)

    def check_alphabet(self, alphabet):
        if self.sub is None:
            return
        for x in alphabet:
            for y in alphabet:
                if (x, y) not in self.sub:
                    raise SchemeError("substitution table has no entry for %s/%s"
                                      % (x, y))

    def fingerprint(self):
        items = sorted(self.sub.items()) if self.sub else []
        return repr((self.match, self.mismatch, self.gap, self.gapgap, items))


DEFAULT_SCHEME = ScoringScheme()


def load_matrix(path):
    """Read a square substitution matrix with a header row of residues."""
    with open(path) as fh:
        rows = [line.split() for line in fh
                if line.strip() and not line.lstrip().startswith("#")]
    if not rows:
        raise SchemeError("substitution matrix %s is empty" % path)
    header = [h.upper() for h in rows[0]]
    table = {}
    for row in rows[1:]:
        # rows may or may not repeat the residue label in the first column
        if len(row) == len(header) + 1:
            label, values = row[0].upper(), row[1:]
        elif len(row) == len(header):
            label, values = header[len(table) // len(header)], row
        else:
            raise SchemeError("row %r does not match header of %d residues"
                              % (row, len(header)))
        for col, v in zip(header, values):
            table[(label, col)] = _number(v)
    if len(table) != len(header) ** 2:
        raise SchemeError("substitution matrix %s is not square" % path)
    return table


def load_scheme(path):
    """Load a key=value scheme file (keys: match, mismatch, gap, gapgap, matrix)."""
    values = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise SchemeError("%s:%d: expected key=value" % (path, lineno))
            key, value = (s.strip() for s in line.split("=", 1))
            values[key.lower()] = value
    kwargs = {}
    for key in ("match", "mismatch", "gap", "gapgap"):
        if key in values:
            kwargs[key] = _number(values.pop(key))
    if "matrix" in values:
        mpath = values.pop("matrix")
        if not os.path.isabs(mpath):
            mpath = os.path.join(os.path.dirname(os.path.abspath(path)), mpath)
        kwargs["sub"] = load_matrix(mpath)
    if values:
        raise SchemeError("unknown scheme keys: %s" % ", ".join(sorted(values)))
    return ScoringScheme(**kwargs)


def _number(text):
    try:
        return int(text)
    except ValueError:
        try:
            return float(text)
        except ValueError:
            raise SchemeError("not a number: %r" % text) from None


def pair_score(scheme, x, y):
    x_gap, y_gap = x == GAP, y == GAP
    if x_gap and y_gap:
        return scheme.gapgap
    if x_gap or y_gap:
        return scheme.gap
    if scheme.sub is not None:
        try:
            return scheme.sub[(x, y)]
        except KeyError:
            raise SchemeError("no substitution score for %s/%s" % (x, y)) from None
    return scheme.match if x == y else scheme.mismatch


def column_score(scheme, column):
    return sum(pair_score(scheme, a, b) for a, b in combinations(column, 2))


def move_column(seqs, cell, d):
    """The alignment column produced by moving into ``cell`` along ``d``."""
    if not any(d):
        raise ValueError("offset vector must not be all zeros")
    column = []
    for s, (c, bit) in enumerate(zip(cell, d)):
        if bit:
            if c < 1:
                raise ValueError("move %r leaves the tensor at cell %r" % (d, cell))
            column.append(seqs[s][c - 1])
        else:
            column.append(GAP)
    return column


def move_column_score(scheme, seqs, cell, d):
    return column_score(scheme, move_column(seqs, cell, d))


@dataclass(frozen=True)
class Alignment:
    rows: tuple
    ids: tuple = None

    def __post_init__(self):
        rows = tuple(self.rows)
        object.__setattr__(self, "rows", rows)
        if self.ids is None:
            object.__setattr__(self, "ids", tuple("s%d" % i for i in range(len(rows))))
        if len({len(r) for r in rows}) > 1:
            raise ValueError("ragged alignment: row lengths %s"
                             % [len(r) for r in rows])
        for c, col in enumerate(zip(*rows)):
            if all(x == GAP for x in col):
                raise ValueError("column %d is all gaps" % c)

    @property
    def length(self):
        return len(self.rows[0]) if self.rows else 0

    def columns(self):
        return zip(*self.rows)

    def ungapped(self):
        return [r.replace(GAP, "") for r in self.rows]

    def to_fasta(self, width=60):
        out = []
        for name, row in zip(self.ids, self.rows):
            out.append(">%s" % name)
            for i in range(0, len(row), width):
                out.append(row[i:i + width])
        return "\n".join(out) + "\n"


def parse_alignment(text):
    """Read gapped FASTA rows into an Alignment (ragged rows are an error)."""
    if hasattr(text, "read"):
        text = text.read()
    if isinstance(text, bytes):
        text = text.decode("ascii", errors="replace")
    ids, rows = [], []
    for lineno, raw in enumerate(io.StringIO(text), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith(">"):
            ids.append(line[1:].strip() or "s%d" % len(ids))
            rows.append([])
        elif not rows:
            raise FastaParseError("sequence data before the first '>' header",
                                  lineno)
        else:
            rows[-1].append(line.upper())
    if len(rows) < 2:
        raise FastaParseError("need >= 2 aligned rows, found %d" % len(rows))
    return Alignment(tuple("".join(r) for r in rows), tuple(ids))


def similarity_score(scheme, aln):
    if len({len(r) for r in aln.rows}) > 1:
        raise ValueError("ragged alignment")
    return sum(column_score(scheme, col) for col in aln.columns())
