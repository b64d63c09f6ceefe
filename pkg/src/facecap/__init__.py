"""Desk-scale personalized facial capture pipeline.

Library layout:

- geom        rigid alignment, template pose fitting
- features    pose / expression / lighting curation features
- index       hierarchical k-means retrieval tree
- rig         jaw-skinned linear blendshape rig
- render      software rasterizer, UV rasters, region boundaries, image loss
- texture     photon splat/gather texture synthesis and turntable curation
- transfer    domain-transfer interface, PCA reference, dataset contraction/expansion
- solver      block coordinate descent inverse-rendering motion solve
- regressor   staged MLP motion-capture regressor
- fixtures    procedural test assets (head mesh, rig, textures, footage)
- fileio      versioned on-disk formats
- cli         pipeline driver (one subcommand per stage)
"""

__version__ = "0.1.0"
