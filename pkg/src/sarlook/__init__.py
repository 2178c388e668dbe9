"""Ocean SAR vignette processing and query-by-example retrieval toolkit.

The package covers the full chain from single-look-complex (SLC) vignettes
to an interactive retrieval service:

* ``vignette``   -- SLC data model, SARV file format, synthetic generator
* ``preprocess`` -- calibration, azimuth DFT, Hamming compensation,
  subaperture decomposition, box-filter decimation
* ``doppler``    -- per-pixel Doppler centroid estimation (lag-1
  conjugate-product phase) on vignettes and sub-looks
* ``encoder``    -- input stacks, a deterministic baseline descriptor and a
  convolutional-transformer auto-encoder trained unsupervised
* ``retrieval``  -- cosine-similarity index with binary persistence
* ``evaluate``   -- precision-at-k, McNemar testing, experiment harness
* ``service``    -- FastAPI app exposing ingest / query / thumbnails
* ``cli``        -- command-line driver for every stage
"""

__version__ = "0.1.0"
