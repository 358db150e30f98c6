
# Marker file to make tests a package
