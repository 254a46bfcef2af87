"""
Run reports written to standard output by the command-line front end
"""

import hashlib
import io
import json
import math
import time

import numpy as np
from ruamel.yaml import YAML

from src.errors import EstimationError


def to_plain(value):
    """
    Convert results to JSON-compatible values

    Complex numbers become [re, im] pairs and non-finite floats the strings
    "inf", "-inf" and "nan".
    """
    if isinstance(value, dict):
        return {str(k): to_plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_plain(v) for v in value]
    if isinstance(value, np.ndarray):
        return to_plain(value.tolist())
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (complex, np.complexfloating)):
        return [to_plain(float(value.real)), to_plain(float(value.imag))]
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if math.isnan(value):
            return 'nan'
        if math.isinf(value):
            return 'inf' if value > 0 else '-inf'
        return value
    return value


class RunReport:
    """Everything one command computed, plus what it was computed from"""

    def __init__(self, command, parameters=None):
        self.command = command
        self.parameters = dict(parameters or {})
        self.outputs = {}
        self.diagnostics = {}
        self.error = None
        self._digest = hashlib.sha256()
        self._digest.update(json.dumps(to_plain(self.parameters), sort_keys=True).encode('utf-8'))
        self._start = time.perf_counter()

    def add_input_file(self, name, path):
        """Fold a file's bytes into the inputs digest"""
        self._digest.update(name.encode('utf-8'))
        try:
            with open(path, 'rb') as f:
                self._digest.update(f.read())
        except OSError:
            self._digest.update(b'<unreadable>')

    def set_error(self, error):
        self.error = error

    @property
    def exit_code(self):
        if self.error is None:
            return 0
        if isinstance(self.error, EstimationError):
            return self.error.exit_code
        return 1

    def to_dict(self):
        report = {
            'command': self.command,
            'parameters': self.parameters,
            'inputs_digest': self._digest.hexdigest(),
            'status': 'ok' if self.error is None else 'error',
            'exit_code': self.exit_code,
            'outputs': self.outputs,
            'diagnostics': self.diagnostics,
        }
        if self.error is not None:
            if isinstance(self.error, EstimationError):
                report['error'] = self.error.to_dict()
            else:
                report['error'] = {'type': type(self.error).__name__, 'message': str(self.error),
                                   'exit_code': self.exit_code, 'details': {}}
        report['wall_time'] = round(time.perf_counter() - self._start, 6)
        return to_plain(report)

    def render(self, as_json=False):
        data = self.to_dict()
        if as_json:
            return json.dumps(data, indent=2, allow_nan=False)
        yaml = YAML()
        yaml.indent(mapping=2, sequence=4, offset=2)
        yaml.default_flow_style = None
        stream = io.StringIO()
        yaml.dump(data, stream)
        return stream.getvalue().rstrip('\n')
