"""geodesic-dcd command-line interface commands"""
