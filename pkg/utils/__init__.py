# Utils package for the irrationality measure explorer
