"""Ground-state and low-energy state preparation."""
