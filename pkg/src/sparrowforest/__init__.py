"""VR immersion prediction: a from-scratch random forest tuned by sparrow
search and by its iterated-local-search-improved variant."""

__version__ = "0.1.0"
