"""IDX and synthetic dataset loaders."""
