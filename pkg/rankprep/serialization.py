import os
import sys
import io
import csv
import enum
import json
import logging
from functools import partial
from collections.abc import Mapping
try:
    import yaml
except ImportError:  # pragma: no cover.
    yaml = None  # pragma: no cover.
try:
    if sys.version_info >= (3, 11):
        import tomllib as tomli
    else:
        import tomli
except ImportError:  # pragma: no cover.
    tomli = None  # pragma: no cover.
try:
    import tomli_w
except ImportError:  # pragma: no cover.
    tomli_w = None  # pragma: no cover.
try:
    import orjson
except ImportError:  # pragma: no cover.
    orjson = None

import numpy as np

from rankprep.helper import sha256hex

logger = logging.getLogger(__name__)


class UnsupportedFormatErr(TypeError):
    pass


SUPPORTED_FORMATS_MSG = 'Only json, yaml, toml, csv and tsv are supported.\n The {} extension is not known.'
EMPTY_CSV_MSG = "NOTE: CSV content was empty in {}"
CONVERSION_MSG = ('We do not know how to convert {} of type {} for json serialization. '
                  'Please pass the default_mapping parameter with proper mapping of the object to a basic python type.')


def _file_type_of(path, file_type):
    if file_type is None:
        file_type = str(path).split('.')[-1]
    return file_type.lower()


def load_path_content(path, file_type=None):
    """
    Loads and deserializes the content of the path.
    """
    file_type = _file_type_of(path, file_type)
    if file_type == 'json':
        with open(path, 'r') as the_file:
            content = json_loads(the_file.read())
    elif file_type in {'yaml', 'yml'}:
        if yaml is None:  # pragma: no cover.
            raise ImportError('Pyyaml needs to be installed.')  # pragma: no cover.
        with open(path, 'r') as the_file:
            content = yaml.safe_load(the_file)
    elif file_type == 'toml':
        if tomli is None:  # pragma: no cover.
            raise ImportError('On python<=3.10 tomli needs to be installed.')  # pragma: no cover.
        with open(path, 'rb') as the_file:
            content = tomli.load(the_file)
    elif file_type in {'csv', 'tsv'}:
        delimiter = '\t' if file_type == 'tsv' else ','
        with open(path, 'r', newline='') as the_file:
            content = list(csv.DictReader(the_file, delimiter=delimiter))
        if not content:
            logger.info(EMPTY_CSV_MSG.format(path))

        # Cells come back as text. Numeric cells are converted to the narrowest of int, float, complex.
        for row in content:
            for key, value in row.items():
                value = value.strip()
                for type_ in [int, float, complex]:
                    try:
                        value = type_(value)
                    except Exception:
                        pass
                    else:
                        row[key] = value
                        break
    else:
        raise UnsupportedFormatErr(SUPPORTED_FORMATS_MSG.format(file_type))
    return content


def save_content_to_path(content, path, file_type=None, keep_backup=False):
    """
    Saves and serializes the content of the path.

    An existing file is moved aside first and restored if writing fails.
    """
    file_type = _file_type_of(path, file_type)
    directory = os.path.dirname(str(path))
    if directory:
        os.makedirs(directory, exist_ok=True)

    if not os.path.exists(path):
        return _save_content(content=content, path=path, file_type=file_type)

    backup_path = f"{path}.bak"
    os.replace(path, backup_path)
    try:
        content = _save_content(content=content, path=path, file_type=file_type)
    except Exception:
        os.replace(backup_path, path)
        raise
    else:
        if not keep_backup:
            os.remove(backup_path)
    return content


def _save_content(content, path, file_type):
    if file_type == 'json':
        with open(path, 'w') as the_file:
            the_file.write(json_dumps(content, indent=2))
            the_file.write('\n')
    elif file_type in {'yaml', 'yml'}:
        if yaml is None:  # pragma: no cover.
            raise ImportError('Pyyaml needs to be installed.')  # pragma: no cover.
        with open(path, 'w') as the_file:
            yaml.safe_dump(to_builtin(content), stream=the_file, sort_keys=True)
    elif file_type == 'toml':
        if tomli_w is None:  # pragma: no cover.
            raise ImportError('Tomli-w needs to be installed.')  # pragma: no cover.
        with open(path, 'wb') as the_file:
            tomli_w.dump(to_builtin(content), the_file)
    elif file_type in {'csv', 'tsv'}:
        delimiter = '\t' if file_type == 'tsv' else ','
        with open(path, 'w', newline='') as csvfile:
            csvfile.write(csv_dumps(content, delimiter=delimiter))
    else:
        raise UnsupportedFormatErr(SUPPORTED_FORMATS_MSG.format(file_type))
    return content


def csv_dumps(rows, delimiter=','):
    """The csv text save_content_to_path would write for rows."""
    rows = [to_builtin(row) for row in rows]
    output = io.StringIO()
    fieldnames = list(rows[0].keys()) if rows else []
    writer = csv.DictWriter(output, fieldnames=fieldnames, delimiter=delimiter, lineterminator='\n')
    writer.writeheader()
    writer.writerows(rows)
    return output.getvalue()


def _serialize_complex(value):
    return [float(value.real), float(value.imag)]


def _serialize_tuple(value):
    if hasattr(value, '_asdict'):  # namedtuple
        return value._asdict()
    return list(value)


def _serialize_ndarray(value):
    if np.iscomplexobj(value):
        return np.stack([value.real, value.imag], axis=-1).tolist()
    return value.tolist()


JSON_CONVERTOR = {
    enum.Enum: lambda x: x.value,
    complex: _serialize_complex,
    np.complexfloating: _serialize_complex,
    np.floating: float,
    np.integer: int,
    np.bool_: bool,
    np.ndarray: _serialize_ndarray,
    tuple: _serialize_tuple,
    set: sorted,
    frozenset: sorted,
    bytes: lambda x: x.decode('utf-8'),
    Mapping: dict,
}


def json_convertor_default(default_mapping=None):
    if default_mapping:
        _convertor_mapping = JSON_CONVERTOR.copy()
        _convertor_mapping.update(default_mapping)
    else:
        _convertor_mapping = JSON_CONVERTOR

    def _convertor(obj):
        for original_type, convert_to in _convertor_mapping.items():
            if isinstance(obj, original_type):
                return convert_to(obj)
        if hasattr(obj, 'to_dict'):
            return obj.to_dict()
        raise TypeError(CONVERSION_MSG.format(obj, type(obj)))

    return _convertor


def to_builtin(obj, default_mapping=None):
    """
    Recursively converts reports into plain python types (dict, list, str, int, float, bool, None).

    NamedTuples become dicts and complex numbers become [re, im] pairs.
    """
    if obj is None or isinstance(obj, (bool, str)) and not isinstance(obj, enum.Enum):
        return obj
    if isinstance(obj, (int, float)) and not isinstance(obj, (enum.Enum, np.generic)):
        return obj
    if isinstance(obj, Mapping):
        return {str(to_builtin(key, default_mapping)): to_builtin(value, default_mapping) for key, value in obj.items()}
    if isinstance(obj, list):
        return [to_builtin(item, default_mapping) for item in obj]
    converted = json_convertor_default(default_mapping)(obj)
    return to_builtin(converted, default_mapping)


def json_dumps(item, default_mapping=None, **kwargs):
    """
    Dump json with extra details that are not normally json serializable.

    Keys are always sorted so the same report gives the same bytes.
    """
    item = to_builtin(item, default_mapping=default_mapping)
    if orjson:
        indent = kwargs.pop('indent', None)
        option = orjson.OPT_SORT_KEYS
        if indent:
            option |= orjson.OPT_INDENT_2
        return orjson.dumps(
            item,
            default=json_convertor_default(default_mapping=default_mapping),
            option=option,
            **kwargs).decode(encoding='utf-8')
    else:
        return json.dumps(
            item,
            default=json_convertor_default(default_mapping=default_mapping),
            sort_keys=True,
            **kwargs)


json_loads = partial(json.loads)


def canonical_hash(item):
    """sha256 hex of the compact, sorted-key json dump of item."""
    return sha256hex(json_dumps(item))


class SerializationMixin:

    def to_json(self, default_mapping=None, **kwargs):
        """
        Dump json of the report.

        **Parameters**

        default_mapping : dictionary(optional), a dictionary of mapping of different types to json types.

        kwargs: Any other kwargs you pass will be passed on to orjson or python's json.dumps()
        """
        return json_dumps(self.to_dict(), default_mapping=default_mapping, **kwargs)

    def to_dict(self):
        """
        Convert the report to a python dictionary of builtin types.
        """
        return to_builtin(self._get_report_items())

    def _get_report_items(self):  # pragma: no cover.
        raise NotImplementedError()
