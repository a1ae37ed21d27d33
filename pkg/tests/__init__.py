#test modules for limitshape; the package itself comes from src via pytest's pythonpath
