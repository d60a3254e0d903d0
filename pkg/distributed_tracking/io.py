""" Output of results: CSV tables, run manifests and an HDF5 archive of scenarios."""
import csv
import dataclasses
import hashlib
import json
import logging
import os

import h5py
import numpy as np

logger = logging.getLogger(__name__)


def format_value(value):
    """ Text of a CSV cell. Floats use their shortest round-trip representation
    so that equal results give byte-identical files.
    """
    if value is None:
        return ''
    if isinstance(value, (bool, np.bool_)):
        return 'true' if value else 'false'
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def row_values(row):
    """ Field values of a dataclass row, in declaration order"""
    return [getattr(row, f.name) for f in dataclasses.fields(row)]


def column_names(row_type):
    return tuple(f.name for f in dataclasses.fields(row_type))


def write_csv(path, columns, rows):
    """ Write a table to a csv file. An empty ``rows`` gives a header-only file.

    :param path: Output file path, its directory must exist
    :type path: str

    :param columns: Column names
    :type columns: Iterable[ str ]

    :param rows: Rows of cell values, each as long as ``columns``
    :type rows: Iterable[ Sequence ]
    """
    columns = list(columns)
    with open(path, 'w', newline='') as fid:
        writer = csv.writer(fid, lineterminator='\n')
        writer.writerow(columns)
        for row in rows:
            if len(row) != len(columns):
                raise ValueError('Row with ' + str(len(row)) + ' cells for ' + str(len(columns)) + ' columns')
            writer.writerow([format_value(v) for v in row])


def write_rows(path, row_type, rows):
    """ Write dataclass instances of type ``row_type`` as a csv table"""
    write_csv(path, column_names(row_type), (row_values(r) for r in rows))


def file_digest(path):
    """ SHA-256 hex digest of a file's content"""
    sha = hashlib.sha256()
    with open(path, 'rb') as fid:
        for chunk in iter(lambda: fid.read(1 << 16), b''):
            sha.update(chunk)
    return sha.hexdigest()


def write_manifest(path, config, seed, extra=None):
    """ Write a json run manifest

    :param path: Output file path
    :type path: str

    :param config: Configuration of the run
    :type config: distributed_tracking.harness.config.ScenarioConfig

    :param seed: Root seed of the run
    :type seed: int

    :param extra: Further entries, e.g. conventions used in the output files
    :type extra: dict
    """
    from distributed_tracking import __version__
    manifest = {'config': config.to_dict(),
                'config_hash': config.config_hash(),
                'seed': int(seed),
                'version': __version__}
    if extra is not None:
        manifest.update(extra)
    with open(path, 'w') as fid:
        json.dump(manifest, fid, indent=2, sort_keys=True)
        fid.write('\n')
    return manifest


class ScenarioArchive:
    """ HDF5 file with one group per scenario. Each group holds the scenario arrays
    as datasets and the generating configuration and seed as attributes. Example usage:

    .. code-block:: python

        from distributed_tracking.io import ScenarioArchive
        from distributed_tracking.harness import scenario as scn

        archive = ScenarioArchive('scenarios.hdf5', 'w')
        archive.add_scenario('run_000', scn.scenario_arrays(scenario), scn.scenario_attrs(scenario))
        archive.close()

        with ScenarioArchive('scenarios.hdf5') as archive:
            data, attrs = archive.get_data_by_group('run_000')

    :param name: The path to the hdf5 file
    :type name: str

    :param mode: ``'r'`` to read, ``'w'`` to create (truncating an existing file) or ``'a'`` to append
    :type mode: str
    """
    required_attrs = ('config', 'seed')
    descriptions = {'truth': 'True target states [m, m/s], (target, timestep, state)',
                    'sensor_positions': 'Sensor positions [m], (timestep, sensor, 2)',
                    'sensor_sigmas': 'Measurement noise standard deviation per sensor [m]',
                    'prior_means': 'Prior mean of the initial state per target',
                    'prior_cov': 'Prior covariance of the initial state',
                    'edges': 'Communication links as rows (timestep, i, j)',
                    'obs_index': 'Observations as rows (timestep, target, sensor)',
                    'obs_values': 'Measured values, one row per row of obs_index'}

    def __init__(self, name, mode='r'):
        if mode not in ('r', 'w', 'a'):
            raise ValueError('Unknown mode ' + str(mode))
        self.hdf = h5py.File(name, mode)

    def __enter__(self):
        return self

    def __exit__(self, *args):
        self.close()

    def add_scenario(self, name, arrays, attrs):
        """ Add a scenario as a new group

        :param name: Group name
        :type name: str

        :param arrays: Datasets to add
        :type arrays: dict[ str, np.ndarray ]

        :param attrs: Group attributes, must at least contain ``config`` (json text) and ``seed``
        :type attrs: dict
        """
        missing = [r for r in self.required_attrs if r not in attrs]
        if missing:
            logger.error('The following required attributes are missing: ' + str(missing))
            raise ValueError('Missing scenario attributes ' + str(missing))

        grp = self.hdf.create_group(name)
        for key in attrs:
            grp.attrs[key] = attrs[key]
        for key, data in arrays.items():
            ds = grp.create_dataset(key, data=np.asarray(data))
            ds.attrs['description'] = self.descriptions.get(key, key)

    def names(self):
        return sorted(self.hdf.keys())

    def get_data_by_group(self, grp_name):
        """ Datasets and attributes of one scenario

        :raises KeyError: If the group does not exist

        :return: Arrays per dataset name and the group attributes
        :rtype: dict, dict
        """
        if grp_name not in self.hdf:
            raise KeyError(grp_name + ' is not in hdf file')
        group = self.hdf[grp_name]
        data = {key: np.array(group[key]) for key in group}
        return data, dict(group.attrs)

    def get_data_by_attributes(self, attributes):
        """ All scenarios whose attributes match ``attributes``

        :return: lists of data and attributes for the found groups, see :py:meth:`get_data_by_group`
        :rtype: list[ dict ], list[ dict ]
        """
        data, attr = [], []
        for grp_name in self.names():
            group = self.hdf[grp_name]
            if all(key in group.attrs and group.attrs[key] == attributes[key] for key in attributes):
                tmp_data, tmp_attr = self.get_data_by_group(grp_name)
                tmp_attr['group'] = grp_name
                data.append(tmp_data)
                attr.append(tmp_attr)
        return data, attr

    def close(self):
        """ Close the file object"""
        self.hdf.close()


def ensure_dir(path):
    os.makedirs(path, exist_ok=True)
    return path
