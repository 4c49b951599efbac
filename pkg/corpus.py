"""
Corpus Module
Publication records: CSV ingestion, multi-category expansion and
subject-category filtering
"""

import logging
import math
import re
from collections import Counter
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import pandas as pd

from config import TRAJECTORY_LENGTH
from errors import CorpusFormatError, ValidationError

logger = logging.getLogger(__name__)

CITATION_COLUMNS = [f'c{t}' for t in range(TRAJECTORY_LENGTH)]
CORPUS_COLUMNS = ['pub_id', 'year', 'journal_id', 'if', 'sc'] + CITATION_COLUMNS
SC_SEPARATOR = ';'


@dataclass(frozen=True)
class Publication:
    """One indexed item with its cumulative citation trajectory c_0..c_9"""

    id: str
    pub_year: int
    journal_id: str
    impact_factor: Optional[float]
    sc_ids: Tuple[str, ...]
    citations: Tuple[int, ...]

    def __post_init__(self):
        if not self.sc_ids:
            raise ValidationError(f"publication {self.id}: empty SC list")
        if len(self.citations) != TRAJECTORY_LENGTH:
            raise ValidationError(
                f"publication {self.id}: expected {TRAJECTORY_LENGTH} citation counts, got {len(self.citations)}")
        if self.impact_factor is not None and not self.impact_factor >= 0:
            raise ValidationError(f"publication {self.id}: negative impact factor")
        for t, count in enumerate(self.citations):
            if count < 0:
                raise ValidationError(f"publication {self.id}: negative citation count at t={t}")
            if t and count < self.citations[t - 1]:
                raise ValidationError(f"publication {self.id}: nonmonotone citation trajectory at t={t}")

    @property
    def has_impact_factor(self):
        return self.impact_factor is not None


@dataclass(frozen=True)
class Observation:
    """One (publication, subject category) pair"""

    pub_id: str
    sc_id: str
    publication: Publication


@dataclass
class IngestReport:
    n_rows: int = 0
    n_publications: int = 0
    n_missing_if: int = 0
    n_observations: int = 0
    sc_counts: Dict[str, int] = field(default_factory=dict)

    @property
    def n_sc(self):
        return len(self.sc_counts)

    def as_rows(self, retained=()):
        retained = set(retained)
        rows = [
            {'item': 'rows', 'sc': '', 'count': self.n_rows},
            {'item': 'publications', 'sc': '', 'count': self.n_publications},
            {'item': 'publications_missing_if', 'sc': '', 'count': self.n_missing_if},
            {'item': 'observations', 'sc': '', 'count': self.n_observations},
            {'item': 'subject_categories', 'sc': '', 'count': self.n_sc},
        ]
        for sc in sorted(self.sc_counts):
            item = 'sc_retained' if sc in retained else 'sc_dropped'
            rows.append({'item': item, 'sc': sc, 'count': self.sc_counts[sc]})
        return rows


def _parse_int(value, row, name):
    text = value.strip()
    try:
        number = int(text)
    except ValueError:
        raise CorpusFormatError(f"non-numeric value '{value}'", row=row, field=name)
    if number < 0:
        raise CorpusFormatError(f"negative value {number}", row=row, field=name)
    return number


def _parse_impact_factor(value, row):
    text = value.strip()
    if text == '':
        return None
    try:
        number = float(text)
    except ValueError:
        raise CorpusFormatError(f"non-numeric value '{value}'", row=row, field='if')
    if not math.isfinite(number):
        raise CorpusFormatError(f"non-finite value '{value}'", row=row, field='if')
    if number < 0:
        raise CorpusFormatError(f"negative value {number}", row=row, field='if')
    return number


def _parse_row(values, row):
    pub_id = values['pub_id'].strip()
    if not pub_id:
        raise CorpusFormatError('empty publication id', row=row, field='pub_id')
    sc_ids = tuple(sc.strip() for sc in values['sc'].split(SC_SEPARATOR) if sc.strip())
    if not sc_ids:
        raise CorpusFormatError('empty SC list', row=row, field='sc')
    citations = tuple(_parse_int(values[name], row, name) for name in CITATION_COLUMNS)
    for t in range(1, TRAJECTORY_LENGTH):
        if citations[t] < citations[t - 1]:
            raise CorpusFormatError(f"nonmonotone citation trajectory at t={t}", row=row, field=f'c{t}')
    return Publication(
        id=pub_id,
        pub_year=_parse_int(values['year'], row, 'year'),
        journal_id=values['journal_id'].strip(),
        impact_factor=_parse_impact_factor(values['if'], row),
        sc_ids=sc_ids,
        citations=citations,
    )


def _too_many_fields(error):
    match = re.search(r'Expected (\d+) fields in line (\d+), saw (\d+)', str(error))
    if match is None:
        return CorpusFormatError(f"wrong column count: {error}")
    expected, line, seen = (int(g) for g in match.groups())
    # line 1 is the header
    return CorpusFormatError(f"wrong column count: expected {expected} fields, saw {seen}", row=line - 1)


def parse_publications(source) -> List[Publication]:
    """Parse a corpus CSV (path or binary/text stream) into validated publications"""
    try:
        # Header read as data so that every row is held to the header's width
        frame = pd.read_csv(source, header=None, dtype=str, keep_default_na=False, encoding='utf-8',
                            skip_blank_lines=True)
    except pd.errors.EmptyDataError:
        raise CorpusFormatError('missing header row')
    except pd.errors.ParserError as e:
        raise _too_many_fields(e)
    except UnicodeDecodeError as e:
        raise CorpusFormatError(f"input is not UTF-8: {e}")

    header = [str(name).strip() for name in frame.iloc[0]]
    if header != CORPUS_COLUMNS:
        raise CorpusFormatError(f"header {header} does not match schema {CORPUS_COLUMNS}")
    frame = frame.iloc[1:]
    frame.columns = header

    publications = []
    for row, values in enumerate(frame.to_dict('records'), start=1):
        # Short rows are padded with NaN by the parser
        missing = [name for name, value in values.items() if not isinstance(value, str)]
        if missing:
            raise CorpusFormatError(
                f"wrong column count: expected {len(CORPUS_COLUMNS)} fields", row=row, field=missing[0])
        publications.append(_parse_row(values, row))

    logger.debug(f"Parsed {len(publications)} publications")
    return publications


def ingest_corpus(paths) -> Tuple[List[Publication], IngestReport]:
    """Parse every corpus file, reject duplicate ids and keep publications with an IF"""
    report = IngestReport()
    publications = []
    seen = set()
    for path in paths:
        try:
            parsed = parse_publications(path)
        except CorpusFormatError as e:
            raise CorpusFormatError(f"{path}: {e}")
        except FileNotFoundError:
            raise ValidationError(f"input file not found: {path}")
        for pub in parsed:
            if pub.id in seen:
                raise ValidationError(f"{path}: duplicate publication id '{pub.id}'")
            seen.add(pub.id)
        report.n_rows += len(parsed)
        publications.extend(parsed)

    usable = [pub for pub in publications if pub.has_impact_factor]
    report.n_missing_if = len(publications) - len(usable)
    report.n_publications = len(usable)
    observations = expand_by_sc(usable)
    report.n_observations = len(observations)
    report.sc_counts = dict(Counter(obs.sc_id for obs in observations))
    if report.n_missing_if:
        logger.warning(f"Excluded {report.n_missing_if} publications without an impact factor")
    logger.info(f"Ingested {report.n_publications} publications, {report.n_observations} observations "
                f"in {report.n_sc} subject categories")
    return usable, report


def serialize_publications(pubs, dest):
    """Write publications in the corpus CSV schema"""
    records = []
    for pub in pubs:
        record = {
            'pub_id': pub.id,
            'year': pub.pub_year,
            'journal_id': pub.journal_id,
            'if': '' if pub.impact_factor is None else repr(float(pub.impact_factor)),
            'sc': SC_SEPARATOR.join(pub.sc_ids),
        }
        record.update(zip(CITATION_COLUMNS, pub.citations))
        records.append(record)
    frame = pd.DataFrame(records, columns=CORPUS_COLUMNS)
    frame.to_csv(dest, index=False, lineterminator='\n')


def expand_by_sc(pubs) -> List[Observation]:
    """Publications in multi-category journals are assigned to each of their SCs"""
    return [Observation(pub_id=pub.id, sc_id=sc, publication=pub) for pub in pubs for sc in pub.sc_ids]


def filter_sc_min_count(obs, threshold) -> Dict[str, List[Observation]]:
    """Keep SCs with strictly more than `threshold` observations"""
    if threshold < 1:
        raise ValidationError(f"SC threshold must be >= 1, got {threshold}")
    groups = {}
    for observation in obs:
        groups.setdefault(observation.sc_id, []).append(observation)
    retained = {sc: members for sc, members in groups.items() if len(members) > threshold}
    dropped = sorted(set(groups) - set(retained))
    if dropped:
        logger.info(f"Dropped {len(dropped)} SCs with <= {threshold} observations")
    return retained


def observations_frame(obs) -> pd.DataFrame:
    """One row per observation with year, journal, IF and the citation trajectory"""
    columns = ['pub_id', 'sc', 'year', 'journal_id', 'impact_factor'] + CITATION_COLUMNS
    records = []
    for observation in obs:
        pub = observation.publication
        records.append((pub.id, observation.sc_id, pub.pub_year, pub.journal_id,
                        pub.impact_factor) + pub.citations)
    frame = pd.DataFrame.from_records(records, columns=columns)
    frame[CITATION_COLUMNS] = frame[CITATION_COLUMNS].astype('int64')
    frame['impact_factor'] = frame['impact_factor'].astype('float64')
    return frame
