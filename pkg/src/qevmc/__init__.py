"""RBM neural quantum states trained with surrogate-assisted Monte Carlo.

Modules:
  configspace  spin configurations, index bijection, monomial basis
  rbm          complex RBM density matrix and log-derivatives
  surrogate    Ising surrogate fit, exact factorization, kappa kernels
  hamiltonian  Pauli-word Hamiltonians and local energies
  quantumsim   statevector proposals, gate decompositions, resources
  mcmc         Metropolis-Hastings proposals, chains, spectral analysis
  vmc          estimators, training loop, zero-variance extrapolation
  ed           exact diagonalization oracle
  cli          command-line reproduction harness
"""

__version__ = "0.1.0"
