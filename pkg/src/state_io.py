"""
JSON file formats for states, observables, bases, probabilities and constraints

A state file looks like::

    {"dim": 2, "matrix": [[[0.5, 0.0], [0.0, 0.0]], [[0.0, 0.0], [0.5, 0.0]]],
     "label": "mixed", "basis": "computational"}

Each matrix entry is a [re, im] pair. Floats are written with their shortest
round-trip representation so a write followed by a read is bit-exact.
"""

import json
import logging
import os

import numpy as np

from src.errors import EstimationError, InputFileError
from src.linalg_core import DensityMatrix, HermitianOperator, as_square_matrix
from src.quantum_mke import MeanConstraint

logger = logging.getLogger(__name__)


def matrix_to_pairs(matrix):
    """Nested [re, im] lists for a complex matrix"""
    matrix = np.asarray(matrix, dtype=complex)
    return [[[float(z.real), float(z.imag)] for z in row] for row in matrix]


def pairs_to_matrix(rows):
    try:
        array = np.array(rows, dtype=float)
    except (TypeError, ValueError) as e:
        raise InputFileError(f"Matrix entries must be [re, im] number pairs: {e}") from e
    if array.ndim != 3 or array.shape[2] != 2:
        raise InputFileError(f"Matrix must be a d x d array of [re, im] pairs, got shape {array.shape}",
                             shape=list(array.shape))
    return array[..., 0] + 1j * array[..., 1]


def _load_json(path):
    try:
        with open(path, encoding='utf-8') as f:
            return json.load(f)
    except FileNotFoundError as e:
        raise InputFileError(f"File not found: {path}", path=str(path)) from e
    except OSError as e:
        raise InputFileError(f"Cannot read {path}: {e}", path=str(path)) from e
    except json.JSONDecodeError as e:
        raise InputFileError(f"{path} is not valid JSON: {e}", path=str(path)) from e


def read_matrix_file(path):
    """
    Read a state file

    Returns:
        tuple: (complex matrix, metadata dict with 'label' and 'basis')
    """
    data = _load_json(path)
    if not isinstance(data, dict) or 'matrix' not in data:
        raise InputFileError(f"{path} must be an object with a 'matrix' field", path=str(path))
    matrix = pairs_to_matrix(data['matrix'])
    dim = data.get('dim', matrix.shape[0])
    if matrix.shape != (dim, dim):
        raise InputFileError(
            f"{path} declares dim {dim} but holds a {matrix.shape[0]} x {matrix.shape[1]} matrix",
            path=str(path),
        )
    return matrix, {'label': data.get('label'), 'basis': data.get('basis')}


def _with_path(reader, path):
    try:
        return reader()
    except InputFileError:
        raise
    except EstimationError as e:
        e.details.setdefault('path', str(path))
        raise


def read_density(path):
    matrix, meta = read_matrix_file(path)
    return _with_path(lambda: DensityMatrix(matrix, label=meta['label']), path)


def read_observable(path):
    matrix, meta = read_matrix_file(path)
    return _with_path(lambda: HermitianOperator(matrix, label=meta['label']), path)


def read_basis(path):
    """Basis file: a state file whose matrix columns are the basis vectors"""
    matrix, _ = read_matrix_file(path)
    return _with_path(lambda: as_square_matrix(matrix), path)


def write_state(path, op, label=None, basis=None):
    """Write a HermitianOperator (or DensityMatrix) as a state file"""
    matrix = op.matrix if isinstance(op, HermitianOperator) else as_square_matrix(op)
    document = {
        'dim': int(matrix.shape[0]),
        'matrix': matrix_to_pairs(matrix),
        'label': label if label is not None else getattr(op, 'label', None),
        'basis': basis,
    }
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    with open(path, 'w', encoding='utf-8') as f:
        json.dump(document, f, indent=2)
        f.write('\n')
    logger.info("Wrote %d x %d state to %s", matrix.shape[0], matrix.shape[0], path)


def read_probabilities(path):
    """Probability file: {"probabilities": [...]} or a bare list"""
    data = _load_json(path)
    if isinstance(data, dict):
        data = data.get('probabilities')
    if not isinstance(data, list) or not all(
            isinstance(x, (int, float)) and not isinstance(x, bool) for x in data):
        raise InputFileError(f"{path} must hold a list of probabilities", path=str(path))
    return [float(x) for x in data]


def read_constraints(path):
    """
    Constraint file: {"constraints": [{"observable": FILE, "mean": X}, ...]}

    Observable paths are resolved relative to the constraint file.
    """
    data = _load_json(path)
    entries = data.get('constraints') if isinstance(data, dict) else data
    if not isinstance(entries, list) or not entries:
        raise InputFileError(f"{path} must hold a nonempty 'constraints' list", path=str(path))

    base = os.path.dirname(os.path.abspath(path))
    constraints, files = [], []
    for index, entry in enumerate(entries):
        if not isinstance(entry, dict) or 'observable' not in entry or 'mean' not in entry:
            raise InputFileError(f"Constraint {index} needs 'observable' and 'mean'", path=str(path), index=index)
        mean = entry['mean']
        if isinstance(mean, bool) or not isinstance(mean, (int, float)):
            raise InputFileError(f"Constraint {index} mean is not a number", path=str(path), index=index)
        observable_path = os.path.join(base, entry['observable'])
        constraints.append(MeanConstraint(read_observable(observable_path), float(mean)))
        files.append(observable_path)
    return constraints, files
