"""Binary amplitude estimation and the ground-energy binary search."""
