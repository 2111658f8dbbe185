"""motzeta: exact computer algebra for motivic zeta series.

Exact arithmetic over the localized Grothendieck scalar ring, symbolic and
point-counting realizations of equivariant classes, truncated and closed-form
zeta series, convolution products, and machine checks of the reflexion,
Thom-Sebastiani, and associativity identities.
"""

__version__ = "0.1.0"
