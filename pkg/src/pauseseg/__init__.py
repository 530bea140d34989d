"""Mine Chinese word boundaries from speech pauses and train a CRF segmenter
on them."""

__version__ = "0.1.0"
