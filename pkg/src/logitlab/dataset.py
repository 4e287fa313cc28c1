"""Choice dataset loading, validation and description.

A dataset is a CSV of long-format choice observations plus a markdown
data dictionary declaring what each column means.  The dictionary is the
single source of truth for variable roles: attributes (per-alternative),
covariates (per-person), availability flags, the choice column and
optional identifier columns.

Datasets are immutable after load and safe to share across concurrent
estimations.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from pathlib import Path

VALID_KINDS = ("attribute", "availability", "covariate", "choice", "id")
VALID_QUANTITIES = ("time", "cost", "other")


class DatasetError(Exception):
    """Base class for dataset loading/validation failures."""


class MissingColumn(DatasetError):
    """Dictionary names a column that the CSV does not have."""


class NonFiniteValue(DatasetError):
    """A numeric cell is NaN or infinite (or not a number at all)."""


class ChoiceUnavailable(DatasetError):
    """A row's chosen alternative is flagged unavailable in that row."""


class TooFewAvailable(DatasetError):
    """A row offers fewer than two available alternatives."""


@dataclass(frozen=True)
class DictEntry:
    """One dictionary row: what a CSV column means."""

    name: str
    kind: str
    alternative: str | None = None
    units: str = ""
    description: str = ""
    quantity: str = "other"  # time | cost | other; used by VoT/sign checks


@dataclass(frozen=True)
class DataDictionary:
    """Ordered collection of :class:`DictEntry` with schema invariants."""

    entries: tuple[DictEntry, ...]

    def __post_init__(self):
        names = [e.name for e in self.entries]
        if len(set(names)) != len(names):
            dupes = sorted({n for n in names if names.count(n) > 1})
            raise DatasetError(f"duplicate dictionary entry names: {dupes}")
        choices = [e for e in self.entries if e.kind == "choice"]
        if len(choices) != 1:
            raise DatasetError(
                f"dictionary must declare exactly one choice entry, found {len(choices)}"
            )
        for e in self.entries:
            if e.kind not in VALID_KINDS:
                raise DatasetError(f"entry {e.name!r}: unknown kind {e.kind!r}")
            if e.kind == "availability" and not e.alternative:
                raise DatasetError(f"availability entry {e.name!r} must name an alternative")
            if e.quantity not in VALID_QUANTITIES:
                raise DatasetError(f"entry {e.name!r}: unknown quantity {e.quantity!r}")

    @property
    def alternatives(self) -> tuple[str, ...]:
        """Alternatives in dictionary order of their availability entries."""
        seen: list[str] = []
        for e in self.entries:
            if e.kind == "availability" and e.alternative not in seen:
                seen.append(e.alternative)
        return tuple(seen)

    @property
    def choice_entry(self) -> DictEntry:
        return next(e for e in self.entries if e.kind == "choice")

    @property
    def id_entry(self) -> DictEntry | None:
        return next((e for e in self.entries if e.kind == "id"), None)

    def of_kind(self, kind: str) -> tuple[DictEntry, ...]:
        return tuple(e for e in self.entries if e.kind == kind)

    @property
    def variable_names(self) -> tuple[str, ...]:
        """Names usable in utility expressions (attributes + covariates)."""
        return tuple(e.name for e in self.entries if e.kind in ("attribute", "covariate"))

    def entry(self, name: str) -> DictEntry:
        for e in self.entries:
            if e.name == name:
                return e
        raise KeyError(name)

    def availability_column(self, alternative: str) -> str:
        for e in self.entries:
            if e.kind == "availability" and e.alternative == alternative:
                return e.name
        raise KeyError(alternative)


@dataclass(frozen=True)
class Observation:
    """One choice situation: attribute/covariate values, availability, choice."""

    person_id: str
    values: dict[str, float]
    availability: dict[str, bool]
    choice: str


@dataclass(frozen=True)
class Dataset:
    """Immutable choice dataset bound to its dictionary."""

    alternatives: tuple[str, ...]
    rows: tuple[Observation, ...]
    dictionary: DataDictionary
    source: str = ""

    @property
    def n_obs(self) -> int:
        return len(self.rows)

    def column(self, name: str) -> list[float]:
        return [r.values[name] for r in self.rows]


# -- dictionary markdown -------------------------------------------------

_DICT_COLUMNS = ("name", "kind", "alternative", "units", "description", "quantity")


def _infer_quantity(kind: str, units: str, description: str) -> str:
    """Tag attribute columns as time/cost when the dictionary omits the column.

    Access/egress times are deliberately 'other': only in-vehicle travel
    time enters the VoT ratio and the behavioural sign checks.
    """
    if kind != "attribute":
        return "other"
    u = units.lower()
    d = description.lower()
    if ("minute" in u or u in ("min", "mins")) and "in-vehicle" in d:
        return "time"
    if any(tok in u for tok in ("pound", "gbp", "eur", "usd")) or "£" in u or "$" in u:
        return "cost"
    return "other"


def parse_dictionary(text: str) -> DataDictionary:
    """Parse a markdown data dictionary.

    The dictionary is a pipe table with columns
    ``name | kind | alternative | units | description`` and an optional
    trailing ``quantity`` column.  Anything outside the first table is
    ignored, so the file may carry a title and prose.
    """
    header: list[str] | None = None
    entries: list[DictEntry] = []
    for raw in text.splitlines():
        line = raw.strip()
        if not line.startswith("|"):
            if header is not None and entries:
                break  # table finished
            continue
        cells = [c.strip() for c in line.strip("|").split("|")]
        if header is None:
            header = [c.lower() for c in cells]
            missing = [c for c in _DICT_COLUMNS[:5] if c not in header]
            if missing:
                raise DatasetError(f"dictionary table is missing columns: {missing}")
            continue
        if set(line) <= {"|", "-", ":", " "}:
            continue  # separator row
        row = dict(zip(header, cells))
        kind = row.get("kind", "")
        units = row.get("units", "")
        description = row.get("description", "")
        quantity = row.get("quantity", "") or _infer_quantity(kind, units, description)
        entries.append(
            DictEntry(
                name=row.get("name", ""),
                kind=kind,
                alternative=row.get("alternative") or None,
                units=units,
                description=description,
                quantity=quantity,
            )
        )
    if header is None or not entries:
        raise DatasetError("no dictionary table found")
    return DataDictionary(entries=tuple(entries))


def write_dictionary(dictionary: DataDictionary, title: str = "Data dictionary") -> str:
    """Render a dictionary back to its canonical markdown table."""
    lines = [f"# {title}", ""]
    lines.append("| " + " | ".join(_DICT_COLUMNS) + " |")
    lines.append("|" + "|".join([" --- "] * len(_DICT_COLUMNS)) + "|")
    for e in dictionary.entries:
        lines.append(
            "| {} | {} | {} | {} | {} | {} |".format(
                e.name, e.kind, e.alternative or "", e.units, e.description, e.quantity
            )
        )
    lines.append("")
    return "\n".join(lines)


# -- CSV loading ---------------------------------------------------------


def _parse_number(cell: str, column: str, row_no: int) -> float:
    try:
        value = float(cell)
    except ValueError:
        raise NonFiniteValue(
            f"row {row_no}, column {column!r}: cannot parse {cell!r} as a number"
        ) from None
    if not math.isfinite(value):
        raise NonFiniteValue(f"row {row_no}, column {column!r}: non-finite value {cell!r}")
    return value


def _parse_availability(cell: str, column: str, row_no: int) -> bool:
    if cell.strip() not in ("0", "1"):
        raise DatasetError(
            f"row {row_no}, column {column!r}: availability must be 0 or 1, got {cell!r}"
        )
    return cell.strip() == "1"


def load_dataset(csv_path: str | Path, dictionary_path: str | Path) -> Dataset:
    """Load and validate a choice dataset.

    Raises :class:`MissingColumn`, :class:`NonFiniteValue`,
    :class:`ChoiceUnavailable` or :class:`TooFewAvailable` on the first
    violation encountered; error messages carry the 1-based data row.
    """
    csv_path = Path(csv_path)
    dictionary_path = Path(dictionary_path)
    dictionary = parse_dictionary(dictionary_path.read_text(encoding="utf-8"))
    alternatives = dictionary.alternatives
    if len(alternatives) < 2:
        raise DatasetError("dictionary must declare availability for at least two alternatives")

    with csv_path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            raw_header = next(reader)
        except StopIteration:
            raise DatasetError(f"{csv_path}: empty CSV") from None
        header = [h.strip() for h in raw_header]
        if len(set(header)) != len(header):
            raise DatasetError(f"{csv_path}: duplicate CSV header names")
        col_index = {name: i for i, name in enumerate(header)}
        for e in dictionary.entries:
            if e.name not in col_index:
                raise MissingColumn(f"dictionary column {e.name!r} not found in {csv_path.name}")

        choice_col = dictionary.choice_entry.name
        id_col = dictionary.id_entry.name if dictionary.id_entry else None
        avail_cols = {alt: dictionary.availability_column(alt) for alt in alternatives}
        value_cols = dictionary.variable_names

        rows: list[Observation] = []
        for row_no, record in enumerate(reader, start=1):
            if not record or all(not c.strip() for c in record):
                continue
            cells = {name: record[i] for name, i in col_index.items()}
            availability = {
                alt: _parse_availability(cells[col], col, row_no)
                for alt, col in avail_cols.items()
            }
            if sum(availability.values()) < 2:
                raise TooFewAvailable(f"row {row_no}: fewer than 2 available alternatives")
            choice = _parse_choice(cells[choice_col], alternatives, row_no)
            if not availability[choice]:
                raise ChoiceUnavailable(
                    f"row {row_no}: chosen alternative {choice!r} is not available"
                )
            values = {
                name: _parse_number(cells[name], name, row_no) for name in value_cols
            }
            person = cells[id_col].strip() if id_col else str(row_no)
            rows.append(
                Observation(
                    person_id=person, values=values, availability=availability, choice=choice
                )
            )

    if not rows:
        raise DatasetError(f"{csv_path}: no data rows")
    return Dataset(
        alternatives=alternatives,
        rows=tuple(rows),
        dictionary=dictionary,
        source=csv_path.name,
    )


def _parse_choice(cell: str, alternatives: tuple[str, ...], row_no: int) -> str:
    """Choice cells hold either an alternative name or its 1-based code."""
    token = cell.strip()
    if token in alternatives:
        return token
    try:
        code = int(float(token))
    except ValueError:
        raise DatasetError(f"row {row_no}: unknown choice value {cell!r}") from None
    if 1 <= code <= len(alternatives):
        return alternatives[code - 1]
    raise DatasetError(f"row {row_no}: choice code {code} out of range 1..{len(alternatives)}")


def format_csv(dataset: Dataset) -> str:
    """Serialize a dataset back to CSV text, columns in dictionary order.

    Reloading the result against the same dictionary yields an equal
    dataset; the text is byte-identical across runs for identical input.
    """
    columns = [e.name for e in dataset.dictionary.entries]
    avail_col_to_alt = {
        e.name: e.alternative for e in dataset.dictionary.entries if e.kind == "availability"
    }
    choice_col = dataset.dictionary.choice_entry.name
    id_entry = dataset.dictionary.id_entry
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(columns)
    for obs in dataset.rows:
        record = []
        for name in columns:
            if name in avail_col_to_alt:
                record.append("1" if obs.availability[avail_col_to_alt[name]] else "0")
            elif name == choice_col:
                record.append(obs.choice)
            elif id_entry is not None and name == id_entry.name:
                record.append(obs.person_id)
            else:
                record.append(_format_cell(obs.values[name]))
        writer.writerow(record)
    return out.getvalue()


def write_csv(dataset: Dataset, path: str | Path) -> None:
    Path(path).write_text(format_csv(dataset), encoding="utf-8")


def _format_cell(value: float) -> str:
    if value == int(value) and abs(value) < 1e15:
        return str(int(value))
    return repr(value)


# -- description and profiling -------------------------------------------


def describe(dataset: Dataset) -> str:
    """Render a deterministic markdown description of the dataset.

    This is the document attached to LLM prompts, so it must read well on
    its own: counts, the alternative list, then one table per variable
    role.  Byte-identical across runs for identical input.
    """
    d = dataset.dictionary
    lines = ["# Data description", ""]
    lines.append(f"observations: {dataset.n_obs}")
    lines.append(f"alternatives: {', '.join(dataset.alternatives)}")
    lines.append("")

    def table(title: str, entries, columns):
        lines.append(f"## {title}")
        lines.append("")
        if not entries:
            lines.append("(none)")
            lines.append("")
            return
        lines.append("| " + " | ".join(columns) + " |")
        lines.append("|" + "|".join([" --- "] * len(columns)) + "|")
        for e in entries:
            cells = [getattr(e, c) if getattr(e, c) is not None else "" for c in columns]
            lines.append("| " + " | ".join(str(c) for c in cells) + " |")
        lines.append("")

    table("Attributes", d.of_kind("attribute"), ["name", "alternative", "units", "description"])
    table("Availability flags", d.of_kind("availability"), ["name", "alternative", "description"])
    table("Covariates", d.of_kind("covariate"), ["name", "units", "description"])
    table(
        "Choice and identifiers",
        d.of_kind("choice") + d.of_kind("id"),
        ["name", "kind", "description"],
    )
    return "\n".join(lines)


def availability_profile(dataset: Dataset) -> dict[str, int]:
    """Count rows in which each alternative is available."""
    counts = {alt: 0 for alt in dataset.alternatives}
    for obs in dataset.rows:
        for alt, avail in obs.availability.items():
            if avail:
                counts[alt] += 1
    return counts
