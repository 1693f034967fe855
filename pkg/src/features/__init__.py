"""Feature packages of the legalizer."""
