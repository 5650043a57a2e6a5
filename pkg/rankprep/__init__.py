"""This module offers grid encodings, rank-1 Hamiltonians, the low-rank adiabatic preparation and its variants."""
# flake8: noqa
__version__ = '0.1.0'
import logging

if __name__ == '__main__':
    logging.basicConfig(format='%(asctime)s %(levelname)8s %(message)s')


from .gridfn import GridSpec, GridFunction, StateVector, encode_function, integral_encode, sample_pointwise
from .rank1 import Rank1Hamiltonian
from .adiabatic import plan, run
from .bounds import eval_bounds
from .helper import RankPrepError
