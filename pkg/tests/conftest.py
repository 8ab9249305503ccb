import nodal

nodal.tune_allocator()
