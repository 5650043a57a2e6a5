import sys
from setuptools import setup

if sys.version_info < (3, 9):  # pragma: no cover
    sys.exit('rankprep needs Python 3.9 or newer.')

version = '0.1.0'


def get_reqs(filename):
    with open(filename, "r") as reqs_file:
        reqs = reqs_file.readlines()
    return reqs


reqs = get_reqs("requirements.txt")
cli_reqs = get_reqs("requirements-cli.txt")
optimize_reqs = get_reqs("requirements-optimize.txt")

with open('README.md') as file:
    long_description = file.read()


setup(name='rankprep',
      version=version,
      description=('Continuous quantum state preparation by adiabatic evolution of rank-1 Hamiltonians, '
                   'simulated on classical hardware.'),
      license='MIT',
      packages=['rankprep'],
      zip_safe=True,
      test_suite="tests",
      include_package_data=True,
      long_description=long_description,
      long_description_content_type='text/markdown',
      install_requires=reqs,
      python_requires='>=3.9',
      extras_require={
          "cli": cli_reqs,
          "optimize": optimize_reqs,
      },
      classifiers=[
          "Intended Audience :: Science/Research",
          "Operating System :: OS Independent",
          "Topic :: Scientific/Engineering :: Physics",
          "Programming Language :: Python :: 3.9",
          "Programming Language :: Python :: 3.10",
          "Programming Language :: Python :: 3.11",
          "Programming Language :: Python :: 3.12",
          "Development Status :: 3 - Alpha",
          "License :: OSI Approved :: MIT License"
      ],
      entry_points={
          'console_scripts': [
              'rankprep=rankprep.commands:cli',
          ],
      },
      )
