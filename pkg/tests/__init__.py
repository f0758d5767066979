# Make tests a package for Python test discovery.
