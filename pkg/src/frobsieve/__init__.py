"""frobsieve: large-sieve bounds and finite-group machinery for Frobenius
statistics of elliptic and genus-2 curves over Q.

Submodules:
  arith_core    primes, arithmetic functions, exact polynomial algebra
  group_core    finite matrix groups, conjugacy classes, counting formulas
  characters    irreducible character tables, primitive product characters
  sieve_core    the abstract large-sieve inequality and its certificates
  curves        point counts, Frobenius data, persistent trace tables
  applications  prime-counting experiments built on the sieve
  cli           command line front end
"""

__version__ = "0.1.0"
