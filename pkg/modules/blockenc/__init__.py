"""Block-encodings, query accounting, and the reflector and projector circuits."""
