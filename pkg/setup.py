from setuptools import setup

#  Generate requirement list from requirements.txt file
with open('requirements.txt', 'r') as fid:
    requirements = [line.strip() for line in fid if line.strip() and not line.strip().startswith('#')]

#  Call setup to make it installable by pip install .
setup(name='distributed_tracking',
      version='1.0',
      description='Distributed rolling window tracking over sensor networks, with centralized and '
                  'consensus Kalman filter baselines',
      packages=['distributed_tracking', 'distributed_tracking.utils', 'distributed_tracking.harness'],
      install_requires=requirements,
      entry_points={'console_scripts': ['drwt-bench=distributed_tracking.harness.cli:main']}
     )
