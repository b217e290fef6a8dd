"""Point cloud geometry compression: voxel grids, CVAE, rANS, bits-back and the sequential baseline."""
