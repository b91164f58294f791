"""Exactly solvable dephasing models.

Modules: ``formfactor`` (spectral weights and quadrature), ``dephasing``
(exact spin-boson pure dephasing), ``mastereq`` (Caldeira-Leggett and
pure-decoherence master equations), ``scattering`` (elastic-scattering
rate), ``chaos`` (random-spectrum baths) and ``cli``.
"""

__version__ = "0.1.0"
